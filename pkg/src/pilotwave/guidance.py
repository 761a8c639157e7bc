"""Beable velocity fields and deterministic trajectory integration.

The velocity law is v = j / rho, evaluated from grid snapshots.  Cells with
rho below node_eps are masked; their velocity is borrowed from the nearest
node-free cell and every visit by a trajectory is counted, so pathological
paths are flagged instead of silently polluting statistics.

Integration is classical RK4 with cubic interpolation of v between grid
points and linear interpolation between snapshots.  Trajectories are
independent given the immutable snapshot timeline; nothing here draws
random numbers, so reruns are bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import PreconditionError
from .wavecore import (
    PERIODIC,
    Grid1D,
    GridWavefunction,
    Timeline,
    _spatial_derivative,
    density,
    probability_current,
)

DEFAULT_NODE_EPS_REL = 1e-12
DEFAULT_MAX_NODE_EVENTS = 100


@dataclass
class VelocityField:
    grid: Grid1D
    v: np.ndarray
    node_mask: np.ndarray

    def __post_init__(self):
        if not np.all(np.isfinite(self.v[~self.node_mask])):
            raise PreconditionError("velocity must be finite off the node mask")


def _nearest_fill(values: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Replace masked entries by the nearest unmasked value."""
    if not mask.any():
        return values
    if mask.all():
        return np.zeros_like(values)
    idx = np.arange(len(values))
    good = idx[~mask]
    nearest = good[np.searchsorted(good, idx).clip(max=len(good) - 1)]
    prev_pos = np.searchsorted(good, idx, side="right") - 1
    prev = good[prev_pos.clip(min=0)]
    take_prev = (prev_pos >= 0) & (np.abs(idx - prev) <= np.abs(nearest - idx))
    out = values.copy()
    src = np.where(take_prev, prev, nearest)
    out[mask] = values[src[mask]]
    return out


def velocity_field(psi: GridWavefunction, node_eps: float | None = None) -> VelocityField:
    """Bohmian velocity v = j/rho with node guarding.

    node_eps defaults to 1e-12 * max(rho).
    """
    rho = density(psi)
    if node_eps is None:
        node_eps = DEFAULT_NODE_EPS_REL * float(rho.max())
    if node_eps <= 0:
        raise PreconditionError("node_eps must be positive")
    j = probability_current(psi)
    mask = rho < node_eps
    v = np.zeros_like(rho)
    v[~mask] = j[~mask] / rho[~mask]
    v = _nearest_fill(v, mask)
    return VelocityField(psi.grid, v, mask)


def pauli_velocity(spinor: "SpinorWavefunction",
                   node_eps: float | None = None) -> VelocityField:
    """Two-component velocity from the spin current.

    j = sum_a [ (hbar/m) Im(psi_a* dpsi_a) - (e/(m c)) A |psi_a|^2 ],
    rho = sum_a |psi_a|^2.  Reduces to the scalar law for psi_2 = 0, A = 0.
    """
    grid = spinor.grid
    rho = np.abs(spinor.up) ** 2 + np.abs(spinor.down) ** 2
    if node_eps is None:
        node_eps = DEFAULT_NODE_EPS_REL * float(rho.max())
    j = np.zeros(grid.n_points)
    for comp in (spinor.up, spinor.down):
        dcomp = _spatial_derivative(grid, comp)
        j += (spinor.hbar / spinor.mass) * np.imag(np.conj(comp) * dcomp)
        j -= (spinor.charge / (spinor.mass * spinor.c)) * spinor.vector_potential * np.abs(comp) ** 2
    mask = rho < node_eps
    v = np.zeros_like(rho)
    v[~mask] = j[~mask] / rho[~mask]
    v = _nearest_fill(v, mask)
    return VelocityField(grid, v, mask)


@dataclass
class SpinorWavefunction:
    """Two-component (Pauli) state with an optional vector potential."""

    grid: Grid1D
    up: np.ndarray
    down: np.ndarray
    vector_potential: np.ndarray
    charge: float = 1.0
    mass: float = 1.0
    c: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        self.up = np.asarray(self.up, dtype=np.complex128)
        self.down = np.asarray(self.down, dtype=np.complex128)
        self.vector_potential = np.asarray(self.vector_potential, dtype=np.float64)
        for arr in (self.up, self.down, self.vector_potential):
            if arr.shape != (self.grid.n_points,):
                raise PreconditionError("component arrays must match the grid")

    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.up) ** 2 + np.abs(self.down) ** 2) * self.grid.dx)

    def normalized(self) -> "SpinorWavefunction":
        s = np.sqrt(self.norm_sq())
        return SpinorWavefunction(self.grid, self.up / s, self.down / s,
                                  self.vector_potential, self.charge,
                                  self.mass, self.c, self.hbar)


class SnapshotVelocity:
    """Velocity provider built from a wavefunction timeline.

    Cubic spline across the grid per snapshot, linear interpolation in time
    between snapshots.  Works for any per-snapshot (v, node_mask) source, so
    the Dirac and measurement modules reuse it via `fields_fn`.
    """

    def __init__(self, timeline: Timeline, node_eps: float | None = None,
                 fields_fn=None):
        self.grid = timeline.grid
        self.times = timeline.times
        fields_fn = fields_fn or (lambda st: velocity_field(st, node_eps))
        self._splines = []
        self._masks = []
        periodic = self.grid.boundary == PERIODIC
        xs = self.grid.x
        if periodic:
            # wrap-around knot so the spline covers the full circle
            xs = np.concatenate([xs, [xs[0] + self.grid.length]])
        for st in timeline.states:
            fld = fields_fn(st)
            v = fld.v
            if periodic:
                v = np.concatenate([v, [v[0]]])
                spl = CubicSpline(xs, v, bc_type="periodic")
            else:
                spl = CubicSpline(xs, v, bc_type="natural")
            self._splines.append(spl)
            self._masks.append(fld.node_mask)

    def _bracket(self, t: float):
        times = self.times
        if t <= times[0]:
            return 0, 0, 0.0
        if t >= times[-1]:
            return len(times) - 1, len(times) - 1, 0.0
        hi = int(np.searchsorted(times, t, side="right"))
        lo = hi - 1
        w = (t - times[lo]) / (times[hi] - times[lo])
        return lo, hi, float(w)

    def velocity(self, pos: np.ndarray, t: float) -> np.ndarray:
        lo, hi, w = self._bracket(t)
        xw = self.grid.wrap(pos)
        v = self._splines[lo](xw)
        if hi != lo and w != 0.0:
            v = (1.0 - w) * v + w * self._splines[hi](xw)
        return v

    def node_hits(self, pos: np.ndarray, t: float) -> np.ndarray:
        lo, hi, w = self._bracket(t)
        mask = self._masks[hi if w > 0.5 else lo]
        return mask[self.grid.cell_index(pos)]


class CallableVelocity:
    """Adapter for an exact velocity function v(x, t) (oracle timelines)."""

    def __init__(self, fn, grid: Grid1D | None = None):
        self._fn = fn
        self.grid = grid

    def velocity(self, pos, t):
        return self._fn(pos, t)

    def node_hits(self, pos, t):
        return np.zeros(np.shape(pos), dtype=bool)


@dataclass
class TrajectoryEnsemble:
    """M beable paths sharing one wavefunction timeline.

    positions[i, k] is trajectory i at times[k].  On periodic grids the
    stored positions are the continuous lift (no wrap jumps); wrap with
    `wrapped_positions` before comparing against densities.
    """

    times: np.ndarray
    positions: np.ndarray
    node_events: np.ndarray
    flagged: np.ndarray
    grid: Grid1D | None = None
    seed: int | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        self.positions = np.asarray(self.positions, dtype=np.float64)
        if self.positions.ndim != 2 or self.positions.shape[0] < 1:
            raise PreconditionError("positions must be an M x T matrix with M >= 1")
        if self.positions.shape[1] != len(self.times):
            raise PreconditionError("positions and times disagree")
        if len(self.times) >= 2 and not np.all(np.diff(self.times) > 0):
            raise PreconditionError("times must be strictly increasing")
        if not np.all(np.isfinite(self.positions)):
            raise PreconditionError("positions must be finite")

    @property
    def n_trajectories(self) -> int:
        return self.positions.shape[0]

    def wrapped_positions(self) -> np.ndarray:
        if self.grid is None:
            return self.positions
        return self.grid.wrap(self.positions)

    def unflagged(self) -> np.ndarray:
        return self.positions[~self.flagged]


def _rk4_step(provider, q: np.ndarray, t: float, h: float) -> np.ndarray:
    k1 = provider.velocity(q, t)
    k2 = provider.velocity(q + 0.5 * h * k1, t + 0.5 * h)
    k3 = provider.velocity(q + 0.5 * h * k2, t + 0.5 * h)
    k4 = provider.velocity(q + h * k3, t + h)
    return q + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_trajectories(timeline, q0, *, t_grid=None, substeps: int = 1,
                           node_eps: float | None = None,
                           max_node_events: int = DEFAULT_MAX_NODE_EVENTS,
                           seed: int | None = None) -> TrajectoryEnsemble:
    """Integrate dQ/dt = v(Q, t) for an ensemble of initial positions.

    timeline: a wavecore.Timeline, or any provider with velocity(x, t)
    (then t_grid gives the output times).  substeps subdivides each output
    interval for the RK4 steps.
    """
    if isinstance(timeline, Timeline):
        provider = SnapshotVelocity(timeline, node_eps)
        times = timeline.times if t_grid is None else np.asarray(t_grid, float)
        grid = timeline.grid
    else:
        provider = timeline
        if t_grid is None:
            raise PreconditionError("t_grid is required for a bare velocity provider")
        times = np.asarray(t_grid, dtype=np.float64)
        grid = getattr(timeline, "grid", None)
    q = np.atleast_1d(np.asarray(q0, dtype=np.float64)).copy()
    m = q.shape[0]
    if grid is not None:
        inside = (q >= grid.x_min) & (q <= grid.x_max)
        if not inside.all():
            raise PreconditionError("initial positions must lie within the grid")
    out = np.empty((m, len(times)))
    out[:, 0] = q
    node_events = np.zeros(m, dtype=int)
    exited = np.zeros(m, dtype=bool)
    reflecting = grid is not None and grid.boundary != PERIODIC
    for kk in range(len(times) - 1):
        t0, t1 = times[kk], times[kk + 1]
        h = (t1 - t0) / substeps
        for s in range(substeps):
            q = _rk4_step(provider, q, t0 + s * h, h)
            if hasattr(provider, "node_hits"):
                node_events += provider.node_hits(q, t0 + (s + 1) * h)
        if reflecting:
            off = (q < grid.x_min) | (q > grid.x_max)
            if off.any():
                exited |= off
                q = np.clip(q, grid.x_min, grid.x_max)
        out[:, kk + 1] = q
    flagged = exited | (node_events > max_node_events)
    return TrajectoryEnsemble(times, out, node_events, flagged, grid=grid, seed=seed)


def phase_gradient_velocity(psi: GridWavefunction,
                            node_eps: float | None = None) -> VelocityField:
    """Cross-check velocity from the unwrapped phase, v = (hbar/m) d(arg psi)/dx.

    Kept as an independent check of v = j/rho; unreliable across nodes,
    which stay masked.
    """
    rho = density(psi)
    if node_eps is None:
        node_eps = DEFAULT_NODE_EPS_REL * float(rho.max())
    mask = rho < node_eps
    phase = np.unwrap(np.angle(psi.amplitudes))
    v = (psi.hbar / psi.mass) * _spatial_derivative(psi.grid, phase)
    v = _nearest_fill(np.where(mask, 0.0, v), mask)
    return VelocityField(psi.grid, v, mask)
