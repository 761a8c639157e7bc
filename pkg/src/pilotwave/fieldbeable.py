"""Field beables for a lattice-regularized real scalar field.

The quadratic lattice Hamiltonian decouples into normal modes
omega_kappa^2 = mass^2 + (2/dx)^2 sin^2(pi kappa / n), each a unit-mass
harmonic oscillator in the rescaled coordinates q_j = phi_j sqrt(dx).
The wavefunctional is restricted to the Gaussian family

    psi_k(Q) = exp( -A_k (Q - q_k)^2 / 2 + i p_k (Q - q_k) + i gamma ),

whose evolution is closed-form: (q_k, p_k) follow the classical oscillator,
A_k a Moebius map, gamma the classical action minus a width phase.  The
beable obeys dQ_k/dt = dS/dQ_k = -Im(A_k) (Q_k - q_k) + p_k per mode,
which in site variables is exactly the lattice functional guidance law
dphi/dt = delta S / delta phi.

Massless lattices carry an omega = 0 zero mode with no normalizable ground
state; it is flagged and frozen (excluded from the wavefunctional, beable
coordinate held constant).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import PreconditionError


@dataclass
class ModeBasis:
    """Orthogonal real normal-mode transform of the coupled-oscillator lattice."""

    n_sites: int
    dx: float
    mass_param: float
    basis: np.ndarray   # rows are mode vectors
    omega: np.ndarray   # frequency per mode row
    kappa: np.ndarray   # underlying lattice wavenumber index per row

    @property
    def frozen(self) -> np.ndarray:
        return self.omega == 0.0

    def to_modes(self, phi: np.ndarray) -> np.ndarray:
        return self.basis @ (np.asarray(phi, float) * np.sqrt(self.dx))

    def to_sites(self, q_modes: np.ndarray) -> np.ndarray:
        return (self.basis.T @ q_modes) / np.sqrt(self.dx)


def lattice_modes(n_sites: int, dx: float, mass_param: float) -> ModeBasis:
    """Real-DFT normal modes of the periodic lattice."""
    if n_sites < 1:
        raise PreconditionError("need at least one site")
    if dx <= 0 or mass_param < 0:
        raise PreconditionError("dx must be positive and mass_param non-negative")
    j = np.arange(n_sites)
    rows = []
    kappas = []
    rows.append(np.full(n_sites, 1.0 / np.sqrt(n_sites)))
    kappas.append(0)
    for k in range(1, (n_sites - 1) // 2 + 1):
        rows.append(np.sqrt(2.0 / n_sites) * np.cos(2 * np.pi * k * j / n_sites))
        kappas.append(k)
        rows.append(np.sqrt(2.0 / n_sites) * np.sin(2 * np.pi * k * j / n_sites))
        kappas.append(k)
    if n_sites % 2 == 0 and n_sites > 1:
        rows.append(np.where(j % 2 == 0, 1.0, -1.0) / np.sqrt(n_sites))
        kappas.append(n_sites // 2)
    basis = np.array(rows)
    kappa = np.array(kappas)
    omega = np.sqrt(mass_param**2 + (2.0 / dx) ** 2 * np.sin(np.pi * kappa / n_sites) ** 2)
    return ModeBasis(n_sites, dx, mass_param, basis, omega, kappa)


@dataclass
class LatticeField:
    """Beable field configuration phi per site."""

    n_sites: int
    dx: float
    mass_param: float
    phi: np.ndarray

    def __post_init__(self):
        self.phi = np.asarray(self.phi, dtype=np.float64)
        if self.n_sites < 1 or self.phi.shape != (self.n_sites,):
            raise PreconditionError("phi must hold one value per site")
        if not np.all(np.isfinite(self.phi)):
            raise PreconditionError("phi must be finite")


@dataclass
class GaussianWavefunctional:
    """Per-mode Gaussian state: complex widths, classical means, global phase."""

    modes: ModeBasis
    width: np.ndarray    # complex A_k, Re > 0 on active modes
    mean_q: np.ndarray
    mean_p: np.ndarray
    phase: float = 0.0

    def __post_init__(self):
        self.width = np.asarray(self.width, dtype=np.complex128)
        self.mean_q = np.asarray(self.mean_q, dtype=np.float64)
        self.mean_p = np.asarray(self.mean_p, dtype=np.float64)
        active = ~self.modes.frozen
        if np.any(self.width[active].real <= 0):
            raise PreconditionError("width parameters need positive real part")

    @property
    def alpha(self) -> np.ndarray:
        """Coherent displacement per mode, alpha = (omega q + i p)/sqrt(2 omega)."""
        w = np.where(self.modes.frozen, 1.0, self.modes.omega)
        return (w * self.mean_q + 1j * self.mean_p) / np.sqrt(2.0 * w)

    def mode_std(self) -> np.ndarray:
        """Position std of |psi_k|^2 per mode: 1/sqrt(2 Re A)."""
        re = np.where(self.modes.frozen, np.inf, self.width.real)
        return 1.0 / np.sqrt(2.0 * re)


def ground_state(modes: ModeBasis) -> GaussianWavefunctional:
    width = np.where(modes.frozen, 1.0 + 0j, modes.omega.astype(complex))
    zeros = np.zeros(len(modes.omega))
    return GaussianWavefunctional(modes, width, zeros.copy(), zeros.copy())


def coherent_state(modes: ModeBasis, mean_q, mean_p) -> GaussianWavefunctional:
    width = np.where(modes.frozen, 1.0 + 0j, modes.omega.astype(complex))
    return GaussianWavefunctional(modes, width, np.asarray(mean_q, float),
                                  np.asarray(mean_p, float))


def _width_phase_increment(a0: complex, omega: float, t: float) -> float:
    """Continuous arg of u(tau) = cos(w tau) + i (A0/w) sin(w tau) over [0, t]."""
    rate = max(omega, abs(a0), omega**2 / max(a0.real, 1e-12))
    n_mesh = max(8, int(4.0 * rate * abs(t) / np.pi) + 1)
    tau = np.linspace(0.0, t, n_mesh + 1)
    u = np.cos(omega * tau) + 1j * (a0 / omega) * np.sin(omega * tau)
    ang = np.unwrap(np.angle(u))
    return float(ang[-1] - ang[0])


def evolve_wavefunctional(state: GaussianWavefunctional, t: float) -> GaussianWavefunctional:
    """Advance the Gaussian family by duration t, exactly (no stepping error)."""
    if t == 0.0:
        return replace(state)
    m = state.modes
    w = m.omega
    active = ~m.frozen
    q = state.mean_q.copy()
    p = state.mean_p.copy()
    a = state.width.copy()
    dphase = 0.0
    if active.any():
        wa = w[active]
        cos, sin = np.cos(wa * t), np.sin(wa * t)
        q0, p0 = state.mean_q[active], state.mean_p[active]
        q[active] = q0 * cos + (p0 / wa) * sin
        p[active] = p0 * cos - q0 * wa * sin
        a0 = state.width[active]
        u = cos + 1j * (a0 / wa) * sin
        a[active] = (a0 * cos + 1j * wa * sin) / u
        # action term (qp - q0 p0)/2 plus the width phase -arg(u)/2
        dphase += float(np.sum((q[active] * p[active] - q0 * p0) / 2.0))
        dphase -= 0.5 * sum(_width_phase_increment(complex(ai), float(wi), t)
                            for ai, wi in zip(a0, wa))
    return GaussianWavefunctional(m, a, q, p, state.phase + dphase)


def mode_velocity(state: GaussianWavefunctional, q_modes: np.ndarray) -> np.ndarray:
    """dQ/dt = -Im(A) (Q - q) + p per mode; frozen modes are static."""
    v = -state.width.imag * (q_modes - state.mean_q) + state.mean_p
    return np.where(state.modes.frozen, 0.0, v)


def field_guidance_step(beable: LatticeField, state: GaussianWavefunctional,
                        dt: float) -> LatticeField:
    """One RK4 step of the field beable; the caller advances the state separately."""
    if dt <= 0:
        raise PreconditionError("dt must be positive")
    m = state.modes
    if beable.n_sites != m.n_sites:
        raise PreconditionError("beable does not match the mode basis")
    q = m.to_modes(beable.phi)
    s_half = evolve_wavefunctional(state, dt / 2.0)
    s_full = evolve_wavefunctional(state, dt)
    k1 = mode_velocity(state, q)
    k2 = mode_velocity(s_half, q + 0.5 * dt * k1)
    k3 = mode_velocity(s_half, q + 0.5 * dt * k2)
    k4 = mode_velocity(s_full, q + dt * k3)
    q_new = q + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    if np.array_equal(q_new, q):
        # zero-velocity step (e.g. ground state): skip the basis round trip
        # so static beables stay bit-identical
        return LatticeField(beable.n_sites, beable.dx, beable.mass_param,
                            beable.phi.copy())
    return LatticeField(beable.n_sites, beable.dx, beable.mass_param,
                        m.to_sites(q_new))


def guide_field_trajectory(beable: LatticeField, state: GaussianWavefunctional,
                           dt: float, n_steps: int):
    """Convenience loop: returns (times, phi history, mode history, final state)."""
    times = np.arange(n_steps + 1) * dt
    phis = np.empty((n_steps + 1, beable.n_sites))
    qs = np.empty((n_steps + 1, len(state.modes.omega)))
    phis[0] = beable.phi
    qs[0] = state.modes.to_modes(beable.phi)
    cur = beable
    st = state
    for k in range(1, n_steps + 1):
        cur = field_guidance_step(cur, st, dt)
        st = evolve_wavefunctional(st, dt)
        phis[k] = cur.phi
        qs[k] = state.modes.to_modes(cur.phi)
    return times, phis, qs, st


def guide_mode_ensemble(state: GaussianWavefunctional, q0: np.ndarray,
                        dt: float, n_steps: int):
    """RK4-advance a batch of beable coordinates of one (or all) modes.

    mode_velocity is affine and mode-diagonal, so it broadcasts over any
    batch shape whose last axis matches the mode count (or over a plain
    vector for a single-mode basis).  Returns (q_final, state_final).
    """
    q = np.asarray(q0, dtype=np.float64).copy()
    st = state
    for _ in range(n_steps):
        s_half = evolve_wavefunctional(st, dt / 2.0)
        s_full = evolve_wavefunctional(st, dt)
        k1 = mode_velocity(st, q)
        k2 = mode_velocity(s_half, q + 0.5 * dt * k1)
        k3 = mode_velocity(s_half, q + 0.5 * dt * k2)
        k4 = mode_velocity(s_full, q + dt * k3)
        q = q + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        st = s_full
    return q, st


def sample_mode_ensemble(state: GaussianWavefunctional, mode_index: int,
                         m: int, seed: int) -> np.ndarray:
    """m i.i.d. draws of the beable mode coordinate from |psi_k|^2."""
    if state.modes.frozen[mode_index]:
        raise PreconditionError("cannot sample a frozen zero mode")
    rng = np.random.default_rng(np.random.SeedSequence([seed, mode_index]))
    sd = float(state.mode_std()[mode_index])
    return rng.normal(float(state.mean_q[mode_index]), sd, size=m)


def classical_trajectory(modes: ModeBasis, phi0: np.ndarray, pi0: np.ndarray,
                         times: np.ndarray) -> np.ndarray:
    """Classical lattice evolution oracle in site variables, exact per mode."""
    q0 = modes.to_modes(phi0)
    p0 = modes.to_modes(pi0)  # same rescaling for the conjugate field
    out = np.empty((len(times), modes.n_sites))
    for i, t in enumerate(times):
        cos = np.cos(modes.omega * t)
        sin = np.sin(modes.omega * t)
        safe_w = np.where(modes.frozen, 1.0, modes.omega)
        qt = q0 * cos + (p0 / safe_w) * sin
        qt = np.where(modes.frozen, q0 + p0 * t, qt)
        out[i] = modes.to_sites(qt)
    return out
