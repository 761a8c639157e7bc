"""1+1D Dirac evolution and the Bohm-Dirac beable velocity.

Representation: alpha = sigma_1, beta = sigma_3, so

    H = c p sigma_1 + m c^2 sigma_3.

Evolution is Strang split-step on a periodic grid: half kinetic rotation in
momentum space, full mass rotation in position space, half kinetic again.
Every factor is an exact 2x2 unitary, so the norm is conserved to rounding.

The beable velocity is v = c (psi^dag sigma_1 psi) / (psi^dag psi); the
Cauchy-Schwarz bound |2 Re(a* b)| <= |a|^2 + |b|^2 makes |v| <= c exact
algebraically.  After the floating-point division the ratio is clamped
into [-1, 1] to absorb last-ulp rounding; a runtime assertion guards
against anything larger than that.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BlowupError, PreconditionError
from .guidance import VelocityField, _nearest_fill
from .wavecore import PERIODIC, Grid1D, Timeline

_ULP_TOL = 1e-12


@dataclass
class DiracSpinor:
    grid: Grid1D
    upper: np.ndarray
    lower: np.ndarray
    mass: float = 1.0
    c: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        self.upper = np.asarray(self.upper, dtype=np.complex128)
        self.lower = np.asarray(self.lower, dtype=np.complex128)
        if self.upper.shape != (self.grid.n_points,) or self.lower.shape != (self.grid.n_points,):
            raise PreconditionError("component arrays must match the grid")
        if self.grid.boundary != PERIODIC:
            raise PreconditionError("Dirac stepper uses a periodic grid")

    def density(self) -> np.ndarray:
        return np.abs(self.upper) ** 2 + np.abs(self.lower) ** 2

    def norm_sq(self) -> float:
        return float(np.sum(self.density()) * self.grid.dx)

    def normalized(self) -> "DiracSpinor":
        s = np.sqrt(self.norm_sq())
        return DiracSpinor(self.grid, self.upper / s, self.lower / s,
                           self.mass, self.c, self.hbar)


def dirac_step(psi: DiracSpinor, dt: float) -> DiracSpinor:
    """One Strang split step; requires the CFL-type bound c dt <= dx."""
    if dt < 0:
        raise PreconditionError("dt must be non-negative")
    if dt == 0:
        return DiracSpinor(psi.grid, psi.upper.copy(), psi.lower.copy(),
                           psi.mass, psi.c, psi.hbar)
    if psi.c * dt > psi.grid.dx:
        raise PreconditionError(
            f"CFL bound violated: c dt = {psi.c * dt:g} > dx = {psi.grid.dx:g}")
    k = 2.0 * np.pi * np.fft.fftfreq(psi.grid.n_points, d=psi.grid.dx)

    def kinetic_half(u, v):
        uk, vk = np.fft.fft(u), np.fft.fft(v)
        a = psi.c * k * (dt / 2.0)  # exp(-i a sigma_1)
        ca, sa = np.cos(a), np.sin(a)
        ukp = ca * uk - 1j * sa * vk
        vkp = ca * vk - 1j * sa * uk
        return np.fft.ifft(ukp), np.fft.ifft(vkp)

    u, v = kinetic_half(psi.upper, psi.lower)
    phase = psi.mass * psi.c**2 * dt / psi.hbar
    u = u * np.exp(-1j * phase)
    v = v * np.exp(+1j * phase)
    u, v = kinetic_half(u, v)
    if not (np.all(np.isfinite(u.view(np.float64))) and np.all(np.isfinite(v.view(np.float64)))):
        raise BlowupError("non-finite spinor amplitudes after step")
    return DiracSpinor(psi.grid, u, v, psi.mass, psi.c, psi.hbar)


def dirac_velocity(psi: DiracSpinor, node_eps: float | None = None) -> VelocityField:
    """v = c (psi^dag sigma_1 psi) / (psi^dag psi); |v| <= c with zero tolerance."""
    rho = psi.density()
    if node_eps is None:
        node_eps = 1e-12 * float(rho.max())
    cur = 2.0 * np.real(np.conj(psi.upper) * psi.lower)
    mask = rho < node_eps
    ratio = np.zeros_like(rho)
    ratio[~mask] = cur[~mask] / rho[~mask]
    over = np.abs(ratio) - 1.0
    if np.any(over > _ULP_TOL):
        raise AssertionError("Dirac velocity exceeded the luminal bound beyond rounding")
    ratio = np.clip(ratio, -1.0, 1.0)
    v = _nearest_fill(psi.c * ratio, mask)
    return VelocityField(psi.grid, v, mask)


def dirac_energy(p: float, mass: float, c: float = 1.0, hbar: float = 1.0) -> float:
    return float(np.sqrt((p * c) ** 2 + (mass * c**2) ** 2))


def positive_energy_plane_wave(grid: Grid1D, p: float, mass: float,
                               c: float = 1.0, hbar: float = 1.0) -> DiracSpinor:
    """Plane wave in the +E eigenspace of H(p); p must sit on the k lattice."""
    e = dirac_energy(p, mass, c, hbar)
    u0, u1 = c * p, e - mass * c**2
    if p == 0:
        u0, u1 = 1.0, 0.0
    n = np.sqrt(abs(u0) ** 2 + abs(u1) ** 2)
    carrier = np.exp(1j * p * grid.x / hbar)
    return DiracSpinor(grid, (u0 / n) * carrier, (u1 / n) * carrier,
                       mass, c, hbar).normalized()


def positive_energy_packet(grid: Grid1D, x0: float, sigma: float, p0: float,
                           mass: float, c: float = 1.0, hbar: float = 1.0) -> DiracSpinor:
    """Gaussian packet projected mode-by-mode onto the +E subspace.

    The projection removes the negative-energy admixture, so the packet
    transports at the group velocity instead of trembling.
    """
    x = grid.x
    envelope = np.exp(-((x - x0) ** 2) / (4 * sigma**2) + 1j * p0 * x / hbar)
    uk = np.fft.fft(envelope)
    k = 2.0 * np.pi * np.fft.fftfreq(grid.n_points, d=grid.dx)
    p = hbar * k
    e = np.sqrt((p * c) ** 2 + (mass * c**2) ** 2)
    a0, a1 = c * p, e - mass * c**2
    zero = (a0 == 0) & (a1 == 0)
    a0 = np.where(zero, 1.0, a0)
    nrm = np.sqrt(a0**2 + a1**2)
    upper = np.fft.ifft(uk * a0 / nrm)
    lower = np.fft.ifft(uk * a1 / nrm)
    return DiracSpinor(grid, upper, lower, mass, c, hbar).normalized()


def evolve_dirac_timeline(psi0: DiracSpinor, dt: float, n_steps: int,
                          record_every: int = 1) -> Timeline:
    times = [0.0]
    states = [psi0]
    psi = psi0
    for kk in range(1, n_steps + 1):
        psi = dirac_step(psi, dt)
        if kk % record_every == 0 or kk == n_steps:
            times.append(kk * dt)
            states.append(psi)
    return Timeline(np.asarray(times), states)


def dirac_fields_fn(node_eps: float | None = None):
    """fields_fn adapter so guidance.SnapshotVelocity can guide Dirac beables."""
    return lambda st: dirac_velocity(st, node_eps)
