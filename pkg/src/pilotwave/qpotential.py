"""Polar decomposition, quantum potential, and the Hamilton-Jacobi residual.

The second-order reading of the dynamics: writing psi = R exp(i S / hbar),
the phase obeys a Hamilton-Jacobi equation with the extra term
Q = -hbar^2 R'' / (2 m R).  This module computes R, S, Q from grid
snapshots and evaluates the residual

    dS/dt + (dS/dx)^2 / (2 m) + V + Q

as a diagnostic; for exact solutions it vanishes, so its magnitude measures
discretization error.

Phase unwrapping is cumulative per node-free segment, anchored at the
segment's density maximum; S is undefined on masked cells.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError
from .guidance import DEFAULT_NODE_EPS_REL
from .wavecore import (
    GridWavefunction,
    Potential,
    Timeline,
    density,
)

BULK_RHO_REL = 1e-3  # residuals reported where rho > BULK_RHO_REL * max(rho)


@dataclass
class PolarFields:
    r: np.ndarray
    s: np.ndarray
    node_mask: np.ndarray
    hbar: float

    def reconstruct(self) -> np.ndarray:
        """R exp(i S / hbar); only meaningful off the node mask."""
        return self.r * np.exp(1j * self.s / self.hbar)


def _segments(mask: np.ndarray):
    """Contiguous index ranges where mask is False."""
    idx = np.flatnonzero(~mask)
    if len(idx) == 0:
        return
    breaks = np.flatnonzero(np.diff(idx) > 1)
    start = 0
    for b in breaks:
        yield idx[start], idx[b]
        start = b + 1
    yield idx[start], idx[-1]


def polar_decompose(psi: GridWavefunction, node_eps: float | None = None) -> PolarFields:
    """R = |psi|, S = hbar * unwrapped arg(psi) per node-free segment."""
    rho = density(psi)
    if node_eps is None:
        node_eps = DEFAULT_NODE_EPS_REL * float(rho.max())
    mask = rho < node_eps
    r = np.abs(psi.amplitudes)
    raw = np.angle(psi.amplitudes)
    s = np.full(psi.grid.n_points, np.nan)
    for lo, hi in _segments(mask):
        seg = raw[lo:hi + 1]
        anchor = int(np.argmax(rho[lo:hi + 1]))
        right = np.unwrap(seg[anchor:])
        left = np.unwrap(seg[:anchor + 1][::-1])[::-1]
        s[lo + anchor:hi + 1] = right
        s[lo:lo + anchor + 1] = left
    return PolarFields(r, psi.hbar * s, mask, psi.hbar)


def _phase_derivative(grid, s):
    """d/dx for unwrapped phase: S is per-segment, never periodic, so the
    array ends always use one-sided stencils."""
    dx = grid.dx
    d = np.empty_like(s)
    d[1:-1] = (s[2:] - s[:-2]) / (2.0 * dx)
    d[0] = (-3.0 * s[0] + 4.0 * s[1] - s[2]) / (2.0 * dx)
    d[-1] = (3.0 * s[-1] - 4.0 * s[-2] + s[-3]) / (2.0 * dx)
    return d


def _second_difference(grid, f):
    dx2 = grid.dx**2
    d2 = np.empty_like(f)
    d2[1:-1] = (f[2:] - 2 * f[1:-1] + f[:-2]) / dx2
    if grid.boundary == "periodic":
        d2[0] = (f[1] - 2 * f[0] + f[-1]) / dx2
        d2[-1] = (f[0] - 2 * f[-1] + f[-2]) / dx2
    else:
        # one-sided copies; end cells sit outside the reported bulk anyway
        d2[0] = d2[1]
        d2[-1] = d2[-2]
    return d2


def quantum_potential(psi: GridWavefunction, node_eps: float | None = None) -> np.ndarray:
    """Q = -hbar^2 R'' / (2 m R), centered second differences, NaN near nodes."""
    rho = density(psi)
    if node_eps is None:
        node_eps = DEFAULT_NODE_EPS_REL * float(rho.max())
    mask = rho < node_eps
    r = np.abs(psi.amplitudes)
    q = np.full(psi.grid.n_points, np.nan)
    d2r = _second_difference(psi.grid, r)
    ok = ~mask
    q[ok] = -psi.hbar**2 * d2r[ok] / (2.0 * psi.mass * r[ok])
    return q


@dataclass
class HJResidual:
    residual: np.ndarray  # NaN outside the bulk region
    bulk_mask: np.ndarray
    max_bulk: float


def _aligned_phase(psi_ref: PolarFields, psi_other: GridWavefunction,
                   anchor: int, node_eps) -> np.ndarray:
    """S of psi_other with the 2 pi branch matched to psi_ref at the anchor cell.

    Valid when the global phase advances by less than pi per snapshot
    spacing, which the snapshot-spacing precondition guarantees.
    """
    pf = polar_decompose(psi_other, node_eps)
    twopi = 2.0 * np.pi * pf.hbar
    delta = pf.s[anchor] - psi_ref.s[anchor]
    return pf.s - twopi * np.round(delta / twopi)


def export_fields_csv(timeline: Timeline, t: float, V: Potential, path,
                      node_eps: float | None = None):
    """Write (x, R, S, Q, residual) at snapshot time t; NaN where undefined."""
    from .runio import write_csv
    psi = timeline.state_at(t)
    pf = polar_decompose(psi, node_eps)
    q = quantum_potential(psi, node_eps)
    res = hj_residual(timeline, t, V, node_eps)
    x = psi.grid.x
    return write_csv(path, ["x", "r", "s", "q", "residual"],
                     ((x[i], pf.r[i], pf.s[i], q[i], res.residual[i])
                      for i in range(psi.grid.n_points)))


def hj_residual(timeline: Timeline, t: float, V: Potential,
                node_eps: float | None = None) -> HJResidual:
    """Residual of the quantum Hamilton-Jacobi equation at snapshot time t.

    Needs snapshots bracketing t on both sides for the centered dS/dt.
    Reported over the bulk region rho > 1e-3 * max(rho).
    """
    i = timeline.index_of(t)
    if i == 0 or i == len(timeline) - 1 or len(timeline) < 3:
        raise PreconditionError("need >= 3 snapshots bracketing t")
    psi = timeline.states[i]
    grid = psi.grid
    rho = density(psi)
    bulk = rho > BULK_RHO_REL * float(rho.max())
    center = polar_decompose(psi, node_eps)
    anchor = int(np.argmax(rho))
    s_prev = _aligned_phase(center, timeline.states[i - 1], anchor, node_eps)
    s_next = _aligned_phase(center, timeline.states[i + 1], anchor, node_eps)
    dt_minus = timeline.times[i] - timeline.times[i - 1]
    dt_plus = timeline.times[i + 1] - timeline.times[i]
    ds_dt = (s_next - s_prev) / (dt_plus + dt_minus)
    ds_dx = _phase_derivative(grid, center.s)
    q = quantum_potential(psi, node_eps)
    res = ds_dt + ds_dx**2 / (2.0 * psi.mass) + V.values + q
    res = np.where(bulk, res, np.nan)
    finite = np.isfinite(res)
    max_bulk = float(np.nanmax(np.abs(res))) if finite.any() else np.nan
    return HJResidual(res, bulk, max_bulk)
