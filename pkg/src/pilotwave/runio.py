"""Deterministic CSV / manifest output.

Floats are serialized with repr (shortest round-trip form), rows in fixed
order, newline fixed to \\n: reruns with identical config and seed produce
byte-identical CSVs.  The manifest is written atomically at run end and
lists every emitted file with its sha256.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from pathlib import Path

import numpy as np

from . import __version__

UNIT_CONVENTION = "hbar = m = 1 unless overridden; discrete L2 normalization sum |psi|^2 dx = 1"


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def write_json(path, payload) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    os.replace(tmp, path)
    return path


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(out_dir, scenario: str, config: dict, seed: int,
                   checks: dict, files: list, duration_seconds: float,
                   extra: dict | None = None) -> Path:
    out_dir = Path(out_dir)
    inventory = {Path(f).name: sha256_file(f) for f in files}
    payload = {
        "tool": "pilotwave",
        "version": __version__,
        "scenario": scenario,
        "seed": seed,
        "units": UNIT_CONVENTION,
        "config": config,
        "checks": {k: bool(v) for k, v in checks.items()},
        "passed": bool(all(checks.values())),
        "duration_seconds": duration_seconds,
        "files": inventory,
    }
    if extra:
        payload.update(extra)
    return write_json(out_dir / "manifest.json", payload)


def snapshot_rows(timeline, current_fn, density_fn):
    """(t, x, re, im, rho, j) rows across an entire timeline."""
    for t, st in zip(timeline.times, timeline.states):
        x = st.grid.x
        rho = density_fn(st)
        j = current_fn(st)
        amp = st.amplitudes
        for i in range(st.grid.n_points):
            yield (t, x[i], amp[i].real, amp[i].imag, rho[i], j[i])
