"""The five figure kinds.

All rendering goes through render(spec): verify checksums, read the CSVs,
draw with a fixed deterministic style, write <stem>.png, <stem>.svg and a
<stem>.json sidecar recording exactly which rows were plotted.
"""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .spec import EmptyInputError, FigureSpec, read_columns, verify_inputs

_RC = {
    "figure.figsize": (7.0, 4.4),
    "figure.dpi": 130,
    "savefig.dpi": 130,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 10,
    "axes.titlesize": 11,
    "svg.hashsalt": "pilotwave-figures",
}

SCENARIO_KINDS = {
    "evolve": ["density_heatmap"],
    "trajectories": ["trajectory_fan", "density_heatmap"],
    "relax": ["relaxation_curve"],
    "measure": ["density_heatmap"],
    "dirac": ["velocity_field"],
    "field": ["trajectory_fan"],
    "belljump": ["occupation_compare"],
}


def _floats(cols, name, path):
    if name not in cols:
        raise EmptyInputError(f"{path}: column {name!r} not found "
                              f"(have {sorted(cols)})")
    return np.array([float(v) for v in cols[name]])


def _fan(spec, ax):
    style = spec.style
    path = spec.inputs.get("trajectories") or next(iter(spec.inputs.values()))
    cols = read_columns(path)
    c_id = style.get("id_column", "trajectory_id" if "trajectory_id" in cols else "site")
    c_t = style.get("time_column", "t")
    c_v = style.get("value_column", "q" if "q" in cols else "phi")
    ids = np.array(cols[c_id])
    t = _floats(cols, c_t, path)
    v = _floats(cols, c_v, path)
    max_series = int(style.get("max_series", 200))
    unique_ids = list(dict.fromkeys(ids))
    shown = unique_ids[:max_series]
    rows_plotted = 0
    for uid in shown:
        sel = ids == uid
        ax.plot(t[sel], v[sel], lw=0.6, alpha=0.7)
        rows_plotted += int(sel.sum())
    ax.set_xlabel("t")
    ax.set_ylabel(c_v)
    ax.set_title(f"beable paths ({len(shown)} of {len(unique_ids)} series)")
    return rows_plotted, len(t), {"t": [t.min(), t.max()], c_v: [v.min(), v.max()]}, len(shown)


def _heatmap(spec, ax):
    style = spec.style
    path = spec.inputs.get("snapshots") or next(iter(spec.inputs.values()))
    cols = read_columns(path)
    c_t = style.get("time_column", "t")
    c_x = style.get("x_column", "x" if "x" in cols else "y")
    c_rho = style.get("density_column", "rho" if "rho" in cols else "rho_total")
    t = _floats(cols, c_t, path)
    x = _floats(cols, c_x, path)
    rho = _floats(cols, c_rho, path)
    times = np.unique(t)
    xs = np.unique(x)
    grid = np.full((len(times), len(xs)), np.nan)
    ti = np.searchsorted(times, t)
    xi = np.searchsorted(xs, x)
    grid[ti, xi] = rho
    mesh = ax.pcolormesh(xs, times, grid, shading="nearest", cmap="magma")
    plt.colorbar(mesh, ax=ax, label=c_rho)
    ax.set_xlabel(c_x)
    ax.set_ylabel("t")
    ax.set_title("density evolution")
    n = len(t)
    return n, n, {"t": [t.min(), t.max()], c_x: [x.min(), x.max()],
                  c_rho: [rho.min(), rho.max()]}, len(times)


def _relaxation(spec, ax):
    path = spec.inputs.get("relaxation") or next(iter(spec.inputs.values()))
    cols = read_columns(path)
    t = _floats(cols, "t", path)
    l1 = _floats(cols, "l1_distance", path)
    ax.plot(t, l1, lw=1.2)
    ax.axhline(l1[0], color="gray", lw=0.8, ls="--")
    ax.set_xlabel("t")
    ax.set_ylabel("coarse-grained L1 distance")
    ax.set_title("relaxation toward quantum equilibrium")
    n = len(t)
    return n, n, {"t": [t.min(), t.max()], "l1_distance": [l1.min(), l1.max()]}, 1


def _occupation(spec, ax):
    path = spec.inputs.get("occupation") or next(iter(spec.inputs.values()))
    cols = read_columns(path)
    t = _floats(cols, "t", path)
    emp = _floats(cols, "empirical", path)
    exact = _floats(cols, "exact", path)
    configs = np.array(cols["config"])
    n_series = 0
    for cfg in dict.fromkeys(configs):
        sel = configs == cfg
        if np.max(exact[sel]) < 1e-6 and np.max(emp[sel]) == 0:
            continue  # configurations never populated clutter the legend
        line, = ax.plot(t[sel], exact[sel], lw=1.2, label=f"{cfg} exact")
        ax.plot(t[sel], emp[sel], "o", ms=3.5, color=line.get_color(),
                label=f"{cfg} empirical")
        n_series += 1
    ax.set_xlabel("t")
    ax.set_ylabel("occupation probability")
    ax.set_title("jump-process occupation vs exact marginals")
    ax.legend(fontsize=7, ncol=2)
    n = len(t)
    return n, n, {"t": [t.min(), t.max()],
                  "probability": [min(emp.min(), exact.min()),
                                  max(emp.max(), exact.max())]}, n_series


def _velocity(spec, ax):
    style = spec.style
    path = spec.inputs.get("fields") or next(iter(spec.inputs.values()))
    cols = read_columns(path)
    x = _floats(cols, style.get("x_column", "x"), path)
    v = _floats(cols, style.get("v_column", "v"), path)
    ax.plot(x, v, lw=1.0, label="v(x)")
    bound = style.get("speed_bound")
    if bound is not None:
        ax.axhline(float(bound), color="crimson", lw=0.8, ls="--", label="+c")
        ax.axhline(-float(bound), color="crimson", lw=0.8, ls="--", label="-c")
    if "rho" in cols:
        rho = _floats(cols, "rho", path)
        ax2 = ax.twinx()
        ax2.fill_between(x, rho, alpha=0.2, color="gray")
        ax2.set_ylabel("rho")
        ax2.grid(False)
    ax.set_xlabel("x")
    ax.set_ylabel("beable velocity")
    ax.set_title("velocity field")
    ax.legend(fontsize=8)
    n = len(x)
    return n, n, {"x": [x.min(), x.max()], "v": [v.min(), v.max()]}, 1


FIGURE_KINDS = {
    "trajectory_fan": _fan,
    "density_heatmap": _heatmap,
    "relaxation_curve": _relaxation,
    "occupation_compare": _occupation,
    "velocity_field": _velocity,
}


def render(spec: FigureSpec) -> dict:
    """Render one figure; returns the sidecar payload."""
    verify_inputs(spec)
    stem = Path(spec.output)
    stem.parent.mkdir(parents=True, exist_ok=True)
    with matplotlib.rc_context(_RC):
        fig, ax = plt.subplots()
        try:
            rows_plotted, rows_read, ranges, n_series = FIGURE_KINDS[spec.kind](spec, ax)
            fig.tight_layout()
            png = stem.with_suffix(".png")
            svg = stem.with_suffix(".svg")
            fig.savefig(png, metadata={"Software": None})
            fig.savefig(svg, metadata={"Date": None})
        finally:
            plt.close(fig)
    sidecar = {
        "kind": spec.kind,
        "inputs": {k: str(v) for k, v in spec.inputs.items()},
        "manifest": str(spec.manifest),
        "rows_read": rows_read,
        "rows_plotted": rows_plotted,
        "n_series": n_series,
        "data_ranges": {k: [float(a), float(b)] for k, (a, b) in ranges.items()},
        "outputs": [str(stem.with_suffix(".png")), str(stem.with_suffix(".svg"))],
    }
    stem.with_suffix(".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    return sidecar
