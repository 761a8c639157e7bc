"""Stochastic beable dynamics on a finite Hilbert space partitioned by
occupation-number configuration.

The state vector evolves exactly (dense eigendecomposition, hbar = 1); the
beable is the configuration label n, following a Markov jump process whose
rates are built from the inter-block probability current

    P_n  = sum_q |<n,q|psi>|^2
    J_nm = 2 Im( psi_n^dag H_nm psi_m )
    T_nm = J_nm / P_m  if J_nm > 0 else 0,

so the master equation dP_n/dt = sum_m (T_nm P_m - T_mn P_n) reproduces the
quantum marginals.  The rate choice is the minimal solution of the
continuity constraint; the full rate matrix is exposed so homogeneous
additions can be injected by callers.

Jumps are sampled by piecewise-constant-rate thinning: the step is shrunk
until (total exit rate) * dt <= 0.1, the rate is evaluated at the step
midpoint, and waiting times are exponential within the step.  Source
configurations with P_m below rate_floor emit no jumps (their occupancy is
itself below the floor); rates above 1/rate_floor are a hard failure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BlowupError, PreconditionError
from .stats import multinomial_count_bounds, total_variation

RATE_FLOOR = 1e-12
THINNING_BUDGET = 0.1


@dataclass
class FockBasis:
    """Basis labels (n, q): configuration tuple plus auxiliary index."""

    labels: list

    def __post_init__(self):
        if len(set(self.labels)) != len(self.labels):
            raise PreconditionError("basis labels must be distinct")
        self.configs = sorted({lab[0] for lab in self.labels})
        self._config_id = {n: i for i, n in enumerate(self.configs)}
        self.block_id = np.array([self._config_id[lab[0]] for lab in self.labels])
        self.dim = len(self.labels)
        self.n_configs = len(self.configs)

    def config_index(self, n) -> int:
        n = tuple(n)
        if n not in self._config_id:
            raise PreconditionError(f"unknown configuration {n}")
        return self._config_id[n]

    def indicator(self) -> np.ndarray:
        """(n_configs x dim) block aggregation matrix."""
        b = np.zeros((self.n_configs, self.dim))
        b[self.block_id, np.arange(self.dim)] = 1.0
        return b

    def validate_occupations(self, f_max: int):
        for n in self.configs:
            if any(f < 0 or f > f_max for f in n):
                raise PreconditionError(f"occupation out of range in {n}")


@dataclass
class QuantumState:
    amplitudes: np.ndarray
    hamiltonian: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        self.hamiltonian = np.asarray(self.hamiltonian, dtype=np.complex128)
        dim = len(self.amplitudes)
        if self.hamiltonian.shape != (dim, dim):
            raise PreconditionError("hamiltonian shape mismatch")
        if np.max(np.abs(self.hamiltonian - self.hamiltonian.conj().T)) > 1e-12:
            raise PreconditionError("hamiltonian must be Hermitian")
        if abs(np.sum(np.abs(self.amplitudes) ** 2) - 1.0) > 1e-12:
            raise PreconditionError("state must be unit-normalized")


class ExactEvolver:
    """psi(t) by dense eigendecomposition; exact at arbitrary times."""

    def __init__(self, state: QuantumState):
        self.psi0 = state.amplitudes
        self.h = state.hamiltonian
        self.evals, self.evecs = np.linalg.eigh(state.hamiltonian)
        self._c0 = self.evecs.conj().T @ self.psi0

    def psi(self, t: float) -> np.ndarray:
        return self.evecs @ (np.exp(-1j * self.evals * t) * self._c0)


def marginal_P(state_or_psi, basis: FockBasis) -> np.ndarray:
    """P_n = sum over the n-block of |amplitudes|^2, aligned with basis.configs."""
    psi = state_or_psi.amplitudes if isinstance(state_or_psi, QuantumState) else state_or_psi
    p = np.bincount(basis.block_id, weights=np.abs(psi) ** 2,
                    minlength=basis.n_configs)
    return p


def current_J(state_or_psi, basis: FockBasis, h: np.ndarray | None = None) -> np.ndarray:
    """Antisymmetric inter-configuration current matrix."""
    if isinstance(state_or_psi, QuantumState):
        psi, h = state_or_psi.amplitudes, state_or_psi.hamiltonian
    else:
        psi = state_or_psi
        if h is None:
            raise PreconditionError("need a Hamiltonian for a bare state vector")
    x = np.imag(np.conj(psi)[:, None] * h * psi[None, :])
    b = basis.indicator()
    return 2.0 * (b @ x @ b.T)


def jump_rates(state_or_psi, basis: FockBasis, h: np.ndarray | None = None,
               rate_floor: float = RATE_FLOOR) -> np.ndarray:
    """T[n, m]: rate of m -> n jumps; zero diagonal, zero out of empty configs."""
    j = current_J(state_or_psi, basis, h)
    p = marginal_P(state_or_psi, basis)
    t = np.zeros_like(j)
    occupied = p > rate_floor
    pos = j > 0.0
    cols = np.where(occupied, p, 1.0)
    t[pos] = (j / cols[None, :])[pos]
    t[:, ~occupied] = 0.0
    np.fill_diagonal(t, 0.0)
    if np.any(t > 1.0 / rate_floor):
        raise BlowupError("jump rate exceeded 1/rate_floor")
    return t


@dataclass
class JumpTrajectory:
    """Piecewise-constant beable path: initial config plus time-ordered jumps."""

    initial: tuple
    events: list  # (time, from_config, to_config)
    seed: int

    def __post_init__(self):
        t_prev = -np.inf
        cur = tuple(self.initial)
        for (t, frm, to) in self.events:
            if t <= t_prev:
                raise PreconditionError("jump events must be strictly time-ordered")
            if tuple(frm) != cur:
                raise PreconditionError("event chain broken: from != previous to")
            t_prev = t
            cur = tuple(to)

    def config_at(self, t: float) -> tuple:
        cur = tuple(self.initial)
        for (tk, _, to) in self.events:
            if tk <= t:
                cur = tuple(to)
            else:
                break
        return cur

    @property
    def n_jumps(self) -> int:
        return len(self.events)


def _exit_rates(evolver: ExactEvolver, basis: FockBasis, m_idx: int, t: float,
                rate_floor: float):
    """Column of T into all configs from source m at time t."""
    psi = evolver.psi(t)
    p = np.bincount(basis.block_id, weights=np.abs(psi) ** 2,
                    minlength=basis.n_configs)
    pm = p[m_idx]
    if pm <= rate_floor:
        return np.zeros(basis.n_configs), 0.0
    sel = basis.block_id == m_idx
    w = evolver.h[:, sel] @ psi[sel]
    y = np.imag(np.conj(psi) * w)
    col = 2.0 * np.bincount(basis.block_id, weights=y, minlength=basis.n_configs)
    col[m_idx] = 0.0
    col = np.where(col > 0.0, col / pm, 0.0)
    total = float(col.sum())
    if total > 1.0 / rate_floor:
        raise BlowupError("jump rate exceeded 1/rate_floor")
    return col, total


def simulate_jump_process(state0: QuantumState, basis: FockBasis, n0,
                          t_end: float, seed: int, dt_max: float = 0.05,
                          rate_floor: float = RATE_FLOOR,
                          rng: np.random.Generator | None = None,
                          evolver: ExactEvolver | None = None) -> JumpTrajectory:
    """Sample one beable path on [0, t_end] starting from configuration n0."""
    evolver = evolver or ExactEvolver(state0)
    n0 = tuple(n0)
    m_idx = basis.config_index(n0)
    if marginal_P(evolver.psi(0.0), basis)[m_idx] <= 0.0:
        raise PreconditionError("initial configuration has zero probability")
    rng = rng or np.random.default_rng(np.random.SeedSequence([seed]))
    t = 0.0
    events = []
    cur_idx = m_idx
    while t < t_end:
        delta = min(dt_max, t_end - t)
        while True:
            rates, total = _exit_rates(evolver, basis, cur_idx, t + delta / 2.0,
                                       rate_floor)
            if total * delta <= THINNING_BUDGET or delta <= 1e-12:
                break
            delta *= 0.5
        if total <= 0.0:
            t += delta
            continue
        wait = rng.exponential(1.0 / total)
        if wait >= delta:
            t += delta
            continue
        # jump at t + wait; target from the rate column at the midpoint
        u = rng.random()
        target_idx = int(np.searchsorted(np.cumsum(rates) / total, u, side="right"))
        target_idx = min(target_idx, basis.n_configs - 1)
        t = t + wait
        frm = basis.configs[cur_idx]
        to = basis.configs[target_idx]
        events.append((t, frm, to))
        cur_idx = target_idx
    return JumpTrajectory(n0, events, seed)


def simulate_jump_ensemble(state0: QuantumState, basis: FockBasis, n_runs: int,
                           t_end: float, seed: int, dt_max: float = 0.05,
                           n0=None) -> list:
    """n_runs independent paths; initial configs drawn from P_n(0) unless fixed.

    Per-run streams derive from (seed, run index), so results are
    schedule-independent.
    """
    evolver = ExactEvolver(state0)
    p0 = marginal_P(state0, basis)
    trajs = []
    for run in range(n_runs):
        rng = np.random.default_rng(np.random.SeedSequence([seed, run]))
        if n0 is None:
            cum = np.cumsum(p0) / p0.sum()
            start = basis.configs[int(np.searchsorted(cum, rng.random(), side="right"))]
        else:
            start = tuple(n0)
        trajs.append(simulate_jump_process(state0, basis, start, t_end, seed,
                                           dt_max=dt_max, rng=rng, evolver=evolver))
    return trajs


@dataclass
class EnsembleComparison:
    times: np.ndarray
    empirical: np.ndarray   # (n_times, n_configs) frequencies
    exact: np.ndarray       # (n_times, n_configs) P_n(t)
    tv_distance: np.ndarray
    passed: bool
    failures: list = field(default_factory=list)


def ensemble_vs_marginal(trajectories: list, state0: QuantumState, basis: FockBasis,
                         probe_times) -> EnsembleComparison:
    """Empirical occupation frequencies against exact P_n(t) with 3-sigma bands."""
    evolver = ExactEvolver(state0)
    probe_times = np.asarray(probe_times, dtype=np.float64)
    m = len(trajectories)
    emp = np.zeros((len(probe_times), basis.n_configs))
    exact = np.zeros_like(emp)
    tv = np.zeros(len(probe_times))
    failures = []
    for k, t in enumerate(probe_times):
        counts = np.zeros(basis.n_configs)
        for traj in trajectories:
            counts[basis.config_index(traj.config_at(t))] += 1
        emp[k] = counts / m
        exact[k] = marginal_P(evolver.psi(t), basis)
        tv[k] = total_variation(emp[k], exact[k])
        lo, hi = multinomial_count_bounds(exact[k], m)
        bad = (counts < lo) | (counts > hi)
        for idx in np.flatnonzero(bad):
            failures.append((float(t), basis.configs[idx], counts[idx],
                             float(exact[k, idx])))
    return EnsembleComparison(probe_times, emp, exact, tv, len(failures) == 0,
                              failures)


# ---------------------------------------------------------------------------
# bundled models


def two_level_model() -> tuple[QuantumState, FockBasis]:
    """sigma_x flips between configurations (0,) and (1,); start in (0,).

    Exact marginals: P_0 = cos^2 t, P_1 = sin^2 t.
    """
    basis = FockBasis([((0,), 0), ((1,), 0)])
    h = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    psi0 = np.array([1.0, 0.0], dtype=complex)
    return QuantumState(psi0, h), basis


def _jw_operators(n_sites: int):
    ident = np.eye(2)
    z = np.diag([1.0, -1.0])
    lower = np.array([[0.0, 1.0], [0.0, 0.0]])  # |1> -> |0>
    ops = []
    for l in range(n_sites):
        mats = [z] * l + [lower] + [ident] * (n_sites - l - 1)
        full = mats[0]
        for m_ in mats[1:]:
            full = np.kron(full, m_)
        ops.append(full)
    return ops


def three_site_model(hopping: float = 1.0, pairing: float = 0.6,
                     chemical: float = 0.4) -> tuple[QuantumState, FockBasis]:
    """Open 3-site spinless-fermion chain with hopping and pair terms.

    The pair creation/annihilation term changes total fermion number by 2,
    so beable paths genuinely create and annihilate particles.  Start from
    the empty lattice.
    """
    ll = 3
    c = _jw_operators(ll)
    cd = [op.conj().T for op in c]
    dim = 2**ll
    h = np.zeros((dim, dim), dtype=complex)
    for l in range(ll - 1):
        h += -hopping * (cd[l] @ c[l + 1] + cd[l + 1] @ c[l])
        h += pairing * (cd[l] @ cd[l + 1] + c[l + 1] @ c[l])
    for l in range(ll):
        h += chemical * (cd[l] @ c[l])
    labels = []
    for i in range(dim):
        occ = tuple((i >> (ll - 1 - l)) & 1 for l in range(ll))
        labels.append((occ, 0))
    basis = FockBasis(labels)
    basis.validate_occupations(1)
    psi0 = np.zeros(dim, dtype=complex)
    psi0[0] = 1.0  # empty lattice
    return QuantumState(psi0, h), basis
