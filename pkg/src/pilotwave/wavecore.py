"""Wavefunctions on a uniform 1D grid and unitary Schrodinger evolution.

Grid points are cell-centered: x_i = x_min + (i + 1/2) dx with
dx = (x_max - x_min) / n_points, for both boundary types.  States are
L2-normalized discretely, sum(|psi_i|^2) * dx = 1.

Two unitary steppers are provided:
  * reflecting boundary: Crank-Nicolson (Cayley form, tridiagonal solve),
    Dirichlet walls exactly at x_min / x_max via antisymmetric ghost cells;
  * periodic boundary: Strang split-operator with spectral kinetic phases.
Both conserve the norm to rounding, which the equivariance statistics in
the rest of the package rely on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.linalg import solve_banded

from .errors import BlowupError, DomainError, PreconditionError, ResolutionError

PERIODIC = "periodic"
REFLECTING = "reflecting"


@dataclass(frozen=True)
class Grid1D:
    """Uniform spatial grid on [x_min, x_max]."""

    n_points: int
    x_min: float
    x_max: float
    boundary: str = PERIODIC

    def __post_init__(self):
        if self.n_points < 8:
            raise PreconditionError(f"n_points must be >= 8, got {self.n_points}")
        if not self.x_max > self.x_min:
            raise PreconditionError("x_max must exceed x_min")
        if self.boundary not in (PERIODIC, REFLECTING):
            raise PreconditionError(f"unknown boundary {self.boundary!r}")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_points

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    @cached_property
    def x(self) -> np.ndarray:
        return self.x_min + (np.arange(self.n_points) + 0.5) * self.dx

    def wrap(self, pos):
        """Map positions into the domain (periodic image for periodic grids)."""
        if self.boundary == PERIODIC:
            return self.x_min + np.mod(pos - self.x_min, self.length)
        return np.clip(pos, self.x_min, self.x_max)

    def cell_index(self, pos):
        """Index of the cell containing each (wrapped) position."""
        idx = np.floor((self.wrap(pos) - self.x_min) / self.dx).astype(int)
        return np.clip(idx, 0, self.n_points - 1)


@dataclass
class GridWavefunction:
    """Complex amplitudes on a grid plus the physical metadata every consumer needs."""

    grid: Grid1D
    amplitudes: np.ndarray
    mass: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (self.grid.n_points,):
            raise PreconditionError("amplitude array does not match grid")
        if self.mass <= 0 or self.hbar <= 0:
            raise PreconditionError("mass and hbar must be positive")
        if not np.all(np.isfinite(self.amplitudes.view(np.float64))):
            raise PreconditionError("amplitudes must be finite")

    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2) * self.grid.dx)

    def normalized(self) -> "GridWavefunction":
        n2 = self.norm_sq()
        if n2 <= 0:
            raise PreconditionError("cannot normalize a zero state")
        return GridWavefunction(self.grid, self.amplitudes / np.sqrt(n2), self.mass, self.hbar)


@dataclass
class Potential:
    """Real, finite potential energy sampled on the grid."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if not np.all(np.isfinite(self.values)):
            raise PreconditionError("potential must be finite at every grid point")

    @classmethod
    def zero(cls, grid: Grid1D) -> "Potential":
        return cls(np.zeros(grid.n_points))

    @classmethod
    def from_callable(cls, grid: Grid1D, fn) -> "Potential":
        return cls(np.asarray(fn(grid.x), dtype=np.float64))

    @classmethod
    def harmonic(cls, grid: Grid1D, mass: float = 1.0, omega: float = 1.0,
                 center: float = 0.0) -> "Potential":
        return cls(0.5 * mass * omega**2 * (grid.x - center) ** 2)


def init_gaussian(grid: Grid1D, x0: float, sigma: float, k0: float = 0.0,
                  mass: float = 1.0, hbar: float = 1.0) -> GridWavefunction:
    """Normalized Gaussian packet exp(-(x-x0)^2/(4 sigma^2)) exp(i k0 x).

    sigma is the position standard deviation of |psi|^2.
    """
    if sigma < 4.0 * grid.dx:
        raise ResolutionError(
            f"sigma={sigma:g} under-resolved: need sigma >= 4 dx = {4 * grid.dx:g}")
    # Mass outside the domain, from the exact Gaussian tail integral.
    from scipy.special import ndtr
    tail = ndtr((grid.x_min - x0) / sigma) + ndtr((x0 - grid.x_max) / sigma)
    if tail > 1e-8:
        raise DomainError(
            f"packet clipped by boundary: tail mass {tail:.3e} exceeds 1e-8")
    x = grid.x
    psi = np.exp(-((x - x0) ** 2) / (4.0 * sigma**2) + 1j * k0 * x)
    return GridWavefunction(grid, psi, mass, hbar).normalized()


def density(psi: GridWavefunction) -> np.ndarray:
    """rho_i = |psi_i|^2."""
    return np.abs(psi.amplitudes) ** 2


def _spatial_derivative(grid: Grid1D, f: np.ndarray) -> np.ndarray:
    """Centered first difference; one-sided 2nd-order at reflecting walls."""
    dx = grid.dx
    if grid.boundary == PERIODIC:
        return (np.roll(f, -1) - np.roll(f, 1)) / (2.0 * dx)
    d = np.empty_like(f)
    d[1:-1] = (f[2:] - f[:-2]) / (2.0 * dx)
    d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dx)
    d[-1] = (3.0 * f[-1] - 4.0 * f[-2] + f[-3]) / (2.0 * dx)
    return d


def probability_current(psi: GridWavefunction) -> np.ndarray:
    """j = (hbar/m) Im(psi* dpsi/dx), centered differences."""
    dpsi = _spatial_derivative(psi.grid, psi.amplitudes)
    return (psi.hbar / psi.mass) * np.imag(np.conj(psi.amplitudes) * dpsi)


def default_dt(grid: Grid1D, mass: float = 1.0, hbar: float = 1.0) -> float:
    return 0.1 * mass * grid.dx**2 / hbar


class SchrodingerStepper:
    """Precomputed unitary stepper for repeated evolution with fixed (V, dt).

    On construction a calibration step on a probe state verifies the
    per-step norm drift stays below 1e-10; a scheme that leaks norm is
    refused outright.
    """

    def __init__(self, grid: Grid1D, potential: Potential, dt: float,
                 mass: float = 1.0, hbar: float = 1.0, calibrate: bool = True):
        if dt <= 0:
            raise PreconditionError("dt must be positive")
        if potential.values.shape != (grid.n_points,):
            raise PreconditionError("potential does not match grid")
        self.grid = grid
        self.potential = potential
        self.dt = float(dt)
        self.mass = float(mass)
        self.hbar = float(hbar)
        self.scheme = "crank-nicolson" if grid.boundary == REFLECTING else "split-operator"
        if grid.boundary == REFLECTING:
            self._build_crank_nicolson()
        else:
            self._build_split_operator()
        if calibrate:
            self._calibrate()

    def _build_crank_nicolson(self):
        n = self.grid.n_points
        dx = self.grid.dx
        t = self.hbar**2 / (2.0 * self.mass * dx**2)
        diag = 2.0 * t + self.potential.values.copy()
        # Dirichlet wall half a cell outside the end points: ghost = -psi_edge.
        diag[0] += t
        diag[-1] += t
        off = -t * np.ones(n - 1)
        lam = 1j * self.dt / (2.0 * self.hbar)
        # A psi(t+dt) = B psi(t) with A = 1 + lam H, B = 1 - lam H.
        self._ab = np.zeros((3, n), dtype=np.complex128)
        self._ab[0, 1:] = lam * off
        self._ab[1, :] = 1.0 + lam * diag
        self._ab[2, :-1] = lam * off
        self._b_diag = 1.0 - lam * diag
        self._b_off = -lam * off

    def _build_split_operator(self):
        n = self.grid.n_points
        k = 2.0 * np.pi * np.fft.fftfreq(n, d=self.grid.dx)
        self._kin_phase = np.exp(-1j * self.hbar * k**2 * self.dt / (2.0 * self.mass))
        self._pot_half = np.exp(-1j * self.potential.values * self.dt / (2.0 * self.hbar))

    def _calibrate(self):
        x = self.grid.x
        c = 0.5 * (self.grid.x_min + self.grid.x_max)
        w = self.grid.length / 8.0
        probe = GridWavefunction(self.grid, np.exp(-((x - c) ** 2) / (4 * w**2)),
                                 self.mass, self.hbar).normalized()
        out = self._apply(probe.amplitudes, check=False)
        drift = abs(float(np.sum(np.abs(out) ** 2)) * self.grid.dx - 1.0)
        if drift > 1e-10:
            raise PreconditionError(
                f"dt={self.dt:g} rejected: calibration norm drift {drift:.3e} > 1e-10")

    def _apply(self, amps: np.ndarray, check: bool = True) -> np.ndarray:
        if self.scheme == "crank-nicolson":
            rhs = self._b_diag * amps
            rhs[:-1] += self._b_off * amps[1:]
            rhs[1:] += self._b_off * amps[:-1]
            out = solve_banded((1, 1), self._ab, rhs)
        else:
            out = self._pot_half * amps
            out = np.fft.ifft(self._kin_phase * np.fft.fft(out))
            out = self._pot_half * out
        if check and not np.all(np.isfinite(out.view(np.float64))):
            raise BlowupError("non-finite amplitudes after step")
        return out

    def step(self, psi: GridWavefunction) -> GridWavefunction:
        return GridWavefunction(self.grid, self._apply(psi.amplitudes),
                                psi.mass, psi.hbar)


def step_schrodinger(psi: GridWavefunction, V: Potential, dt: float) -> GridWavefunction:
    """Advance psi by one unitary step of duration dt under potential V.

    dt = 0 returns psi unchanged; negative dt is rejected.
    """
    if dt < 0:
        raise PreconditionError("dt must be non-negative")
    if dt == 0:
        return GridWavefunction(psi.grid, psi.amplitudes.copy(), psi.mass, psi.hbar)
    stepper = SchrodingerStepper(psi.grid, V, dt, psi.mass, psi.hbar, calibrate=False)
    return stepper.step(psi)


@dataclass
class Timeline:
    """Immutable sequence of wavefunction snapshots at strictly increasing times."""

    times: np.ndarray
    states: list = field(default_factory=list)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        if len(self.times) != len(self.states):
            raise PreconditionError("times and states length mismatch")
        if len(self.times) >= 2 and not np.all(np.diff(self.times) > 0):
            raise PreconditionError("snapshot times must be strictly increasing")

    def __len__(self):
        return len(self.states)

    @property
    def grid(self) -> Grid1D:
        return self.states[0].grid

    def index_of(self, t: float, tol: float = 1e-9) -> int:
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > tol:
            raise PreconditionError(f"t={t:g} is not a snapshot time")
        return i

    def state_at(self, t: float) -> GridWavefunction:
        return self.states[self.index_of(t)]


def evolve_timeline(psi0: GridWavefunction, V: Potential, dt: float, n_steps: int,
                    record_every: int = 1, t0: float = 0.0) -> Timeline:
    """Evolve psi0 for n_steps of size dt, recording every record_every steps."""
    stepper = SchrodingerStepper(psi0.grid, V, dt, psi0.mass, psi0.hbar)
    times = [t0]
    states = [psi0]
    psi = psi0
    for k in range(1, n_steps + 1):
        psi = stepper.step(psi)
        if k % record_every == 0 or k == n_steps:
            times.append(t0 + k * dt)
            states.append(psi)
    return Timeline(np.array(times), states)


def analytic_free_gaussian(grid: Grid1D, t: float, x0: float, sigma0: float,
                           k0: float = 0.0, mass: float = 1.0,
                           hbar: float = 1.0) -> GridWavefunction:
    """Exact free evolution of the init_gaussian packet, for oracle timelines."""
    tau = hbar * t / (2.0 * mass * sigma0**2)
    x = grid.x
    xc = x0 + hbar * k0 * t / mass
    denom = 4.0 * sigma0**2 * (1.0 + 1j * tau)
    phase = k0 * (x - xc) + hbar * k0**2 * t / (2.0 * mass)
    psi = (1.0 + 1j * tau) ** -0.5 * np.exp(-((x - xc) ** 2) / denom + 1j * phase)
    return GridWavefunction(grid, psi, mass, hbar).normalized()


def analytic_timeline(grid: Grid1D, times, state_fn) -> Timeline:
    """Timeline built from an exact solution state_fn(t) -> GridWavefunction."""
    times = np.asarray(times, dtype=np.float64)
    return Timeline(times, [state_fn(t) for t in times])
