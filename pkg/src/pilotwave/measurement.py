"""Two-outcome von Neumann measurement with a continuous pointer beable.

The system is a two-valued degree of freedom coupled impulsively to a
pointer coordinate y through the generator g * S (x) p_y, S eigenvalues +-1;
the system's own kinetic term is ignored during the measurement window.
Under this interaction branch a is rigidly translated at velocity s_a * g,
and the exact pointer current is j = sum_a s_a g w_a |chi_a|^2, so the
beable velocity is

    v(y, t) = g * (w1 rho1 - w2 rho2) / (rho1 + rho2),   rho_a = w_a |chi_a|^2.

Once the branches stop overlapping, the beable is carried by one branch
alone: that is the effective collapse, and outcome statistics follow the
branch weights.

Translations are applied spectrally on a periodic pointer grid, which is
exact for band-limited packets; a clipping guard rejects runs whose
branches reach the domain edge.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, PreconditionError
from .guidance import SnapshotVelocity, VelocityField, _nearest_fill, integrate_trajectories
from .equilibrium import sample_from_density
from .stats import binomial_band
from .wavecore import PERIODIC, Grid1D, Timeline, init_gaussian

EDGE_GUARD_CELLS = 4
EDGE_MASS_TOL = 1e-10


@dataclass
class BranchedState:
    """c1 chi1 (x) pointer-branch-1 + c2 chi2 (x) pointer-branch-2.

    chi1/chi2 are unit-normalized pointer fields; the weights live in the
    coefficients.  pointer_mass is carried as metadata: the impulsive
    interaction generates no pointer dispersion.
    """

    pointer_grid: Grid1D
    chi1: np.ndarray
    chi2: np.ndarray
    c1: complex
    c2: complex
    coupling: float
    pointer_mass: float = 1.0

    def __post_init__(self):
        self.chi1 = np.asarray(self.chi1, dtype=np.complex128)
        self.chi2 = np.asarray(self.chi2, dtype=np.complex128)
        w = abs(self.c1) ** 2 + abs(self.c2) ** 2
        if abs(w - 1.0) > 1e-10:
            raise PreconditionError("|c1|^2 + |c2|^2 must equal 1")
        dx = self.pointer_grid.dx
        for c, chi in ((self.c1, self.chi1), (self.c2, self.chi2)):
            if abs(c) > 0 and abs(np.sum(np.abs(chi) ** 2) * dx - 1.0) > 1e-8:
                raise PreconditionError("branch fields must be unit-normalized")

    @property
    def grid(self) -> Grid1D:
        return self.pointer_grid

    @property
    def weights(self) -> tuple[float, float]:
        return abs(self.c1) ** 2, abs(self.c2) ** 2

    def branch_densities(self) -> tuple[np.ndarray, np.ndarray]:
        w1, w2 = self.weights
        return w1 * np.abs(self.chi1) ** 2, w2 * np.abs(self.chi2) ** 2

    def total_norm_sq(self) -> float:
        r1, r2 = self.branch_densities()
        return float(np.sum(r1 + r2) * self.pointer_grid.dx)


@dataclass
class OutcomeRecord:
    trajectory_id: int
    outcome: int  # 1, 2, or 0 for undecided
    decided_at: float
    final_pointer: float


def make_ready_state(pointer_grid: Grid1D, sigma: float, c1: complex, c2: complex,
                     coupling: float, pointer_mass: float = 1.0,
                     center: float = 0.0) -> BranchedState:
    """Both branches in the same narrow ready packet centered at `center`."""
    if pointer_grid.boundary != PERIODIC:
        raise PreconditionError("pointer grid must be periodic (spectral shifts)")
    phi0 = init_gaussian(pointer_grid, center, sigma).amplitudes
    return BranchedState(pointer_grid, phi0, phi0.copy(), c1, c2, coupling, pointer_mass)


def _spectral_shift(grid: Grid1D, f: np.ndarray, delta: float) -> np.ndarray:
    k = 2.0 * np.pi * np.fft.fftfreq(grid.n_points, d=grid.dx)
    return np.fft.ifft(np.fft.fft(f) * np.exp(-1j * k * delta))


def _edge_mass(grid: Grid1D, rho: np.ndarray) -> float:
    g = EDGE_GUARD_CELLS
    return float((rho[:g].sum() + rho[-g:].sum()) * grid.dx)


def evolve_measurement(state: BranchedState, duration: float, dt: float) -> Timeline:
    """Timeline of branch states; branch 1 drifts at +g, branch 2 at -g."""
    if dt <= 0 or duration <= 0:
        raise PreconditionError("duration and dt must be positive")
    n_steps = int(round(duration / dt))
    times = np.arange(n_steps + 1) * dt
    g = state.coupling
    grid = state.pointer_grid
    states = []
    for t in times:
        chi1 = _spectral_shift(grid, state.chi1, +g * t)
        chi2 = _spectral_shift(grid, state.chi2, -g * t)
        snap = BranchedState(grid, chi1, chi2, state.c1, state.c2, g, state.pointer_mass)
        r1, r2 = snap.branch_densities()
        if _edge_mass(grid, r1 + r2) > EDGE_MASS_TOL:
            raise DomainError(f"branch clipped by pointer grid at t={t:g}")
        states.append(snap)
    return Timeline(times, states)


def branch_overlap(state: BranchedState) -> float:
    """integral of min(rho1, rho2) / min(w1, w2): 1 for identical shapes, 0 disjoint."""
    w1, w2 = state.weights
    if w1 == 0.0 or w2 == 0.0:
        return 0.0
    r1, r2 = state.branch_densities()
    return float(np.sum(np.minimum(r1, r2)) * state.pointer_grid.dx / min(w1, w2))


def branch_velocity(state: BranchedState, node_eps: float | None = None) -> VelocityField:
    """Pointer velocity of the two-component current for the impulsive coupling."""
    r1, r2 = state.branch_densities()
    rho = r1 + r2
    if node_eps is None:
        node_eps = 1e-12 * float(rho.max())
    mask = rho < node_eps
    v = np.zeros_like(rho)
    v[~mask] = state.coupling * (r1[~mask] - r2[~mask]) / rho[~mask]
    v = _nearest_fill(v, mask)
    return VelocityField(state.pointer_grid, v, mask)


def _restricted_velocity(state: BranchedState, keep: int) -> VelocityField:
    """Velocity with the other branch removed (occupied-branch dynamics)."""
    sign = +1.0 if keep == 1 else -1.0
    r1, r2 = state.branch_densities()
    rho = (r1, r2)[keep - 1]
    mask = rho < 1e-12 * float(rho.max()) if rho.max() > 0 else np.ones_like(rho, bool)
    v = np.where(mask, 0.0, sign * state.coupling)
    v = _nearest_fill(v, mask)
    return VelocityField(state.pointer_grid, v, mask)


class _MeasurementVelocity(SnapshotVelocity):
    def __init__(self, timeline: Timeline, node_eps=None):
        super().__init__(timeline, fields_fn=lambda st: branch_velocity(st, node_eps))


def _dominant_branch(state: BranchedState, pos: float) -> int:
    """1 or 2 by which weighted branch density supports pos; 0 if neither."""
    i = int(state.pointer_grid.cell_index(pos))
    r1, r2 = state.branch_densities()
    a, b = r1[i], r2[i]
    if a == 0.0 and b == 0.0:
        return 0
    return 1 if a >= b else 2


@dataclass
class MeasurementSummary:
    n_trajectories: int
    counts: dict
    frequency_1: float
    born_weight_1: float
    band_3sigma: float
    born_pass: bool
    undecided_fraction: float
    decided_at: float
    final_overlap: float


def run_measurement_ensemble(state: BranchedState, duration: float, dt: float,
                             m: int, seed: int, collapse_eps: float = 1e-6,
                             substeps: int = 1):
    """Guide m pointer beables through the measurement; assign outcomes.

    Outcomes are assigned at the first snapshot where the branch overlap
    drops below collapse_eps, by which branch's support holds the beable.
    Beables still unsupported by either branch at the end are reported as
    undecided, never dropped.
    """
    timeline = evolve_measurement(state, duration, dt)
    rho0 = np.sum(state.branch_densities(), axis=0)
    samples = sample_from_density(state.pointer_grid, rho0, m, seed)
    provider = _MeasurementVelocity(timeline)
    ens = integrate_trajectories(provider, samples.positions,
                                 t_grid=timeline.times, substeps=substeps, seed=seed)

    overlaps = np.array([branch_overlap(st) for st in timeline.states])
    below = np.flatnonzero(overlaps < collapse_eps)
    records = []
    if len(below) == 0:
        for i in range(m):
            records.append(OutcomeRecord(i, 0, np.nan, float(ens.positions[i, -1])))
        k_dec = None
    else:
        k_dec = int(below[0])
        t_dec = float(timeline.times[k_dec])
        for i in range(m):
            outcome = _dominant_branch(timeline.states[k_dec],
                                       float(ens.positions[i, k_dec]))
            k, t_assigned = k_dec, t_dec
            while outcome == 0 and k + 1 < len(timeline):
                k += 1
                outcome = _dominant_branch(timeline.states[k],
                                           float(ens.positions[i, k]))
                t_assigned = float(timeline.times[k])
            records.append(OutcomeRecord(
                i, outcome, t_assigned if outcome else np.nan,
                float(ens.positions[i, -1])))

    counts = {1: 0, 2: 0, 0: 0}
    for r in records:
        counts[r.outcome] += 1
    w1, _ = state.weights
    freq1 = counts[1] / m
    band = binomial_band(w1, m)
    summary = MeasurementSummary(
        n_trajectories=m,
        counts=counts,
        frequency_1=freq1,
        born_weight_1=w1,
        band_3sigma=band,
        born_pass=bool(abs(freq1 - w1) <= band and counts[0] / m < 0.005),
        undecided_fraction=counts[0] / m,
        decided_at=float(timeline.times[k_dec]) if k_dec is not None else np.nan,
        final_overlap=float(overlaps[-1]),
    )
    return records, summary, timeline, ens


def dynamical_irrelevance_check(state: BranchedState, pos: float,
                                collapse_eps: float = 1e-6,
                                v_floor: float = 1e-12) -> float:
    """Relative deviation between full and occupied-branch velocity at pos.

    Contract: < 1e-6 once branch overlap < 1e-8.  Raises if the branches
    still overlap or pos is not clearly inside one branch's support.
    """
    if branch_overlap(state) >= collapse_eps:
        raise PreconditionError("branches still overlap; no occupied branch yet")
    occ = _dominant_branch(state, pos)
    if occ == 0:
        raise PreconditionError("pos unsupported by either branch")
    r1, r2 = state.branch_densities()
    i = int(state.pointer_grid.cell_index(pos))
    lo, hi = (r2[i], r1[i]) if occ == 1 else (r1[i], r2[i])
    if hi > 0 and lo > 0.01 * hi:
        raise PreconditionError("pos lies in the branch overlap region")
    v_full = branch_velocity(state).v[i]
    v_occ = _restricted_velocity(state, occ).v[i]
    return float(abs(v_full - v_occ) / (abs(v_occ) + v_floor))
