import json
import subprocess
import sys

import pytest

# Reduced-scale configs: the figure tests need the emitted files and the
# manifest, which every run writes regardless of check status.
SMALL = {
    "evolve": {"n_steps": 50, "record_every": 10},
    "trajectories": {"n_trajectories": 120, "n_snapshots": 21, "t_end": 1.0,
                     "solver_substeps": 2},
    "relax": {"n_trajectories": 300, "n_snapshots": 401, "t_end": 0.4,
              "n_modes": 8, "grid": {"n_points": 256}},
    "measure": {"n_trajectories": 200, "dt": 0.05},
    "dirac": {"n_trajectories": 200, "n_steps": 60},
    "field": {"n_steps": 150, "mode_ensemble": {"n_samples": 400,
                                                "n_steps": 100, "t_end": 0.1}},
    "belljump": {"n_runs": 300, "initial_config": [0]},
}


@pytest.fixture(scope="session")
def runs(tmp_path_factory):
    """One reduced-scale run directory per scenario, produced by the real CLI."""
    base = tmp_path_factory.mktemp("runs")
    for name, block in SMALL.items():
        cfg = base / f"{name}_config.json"
        cfg.write_text(json.dumps({"seed": 7, name: block}))
        proc = subprocess.run(
            [sys.executable, "-m", "pilotwave.cli", name,
             "--config", str(cfg), "--out", str(base / name)],
            capture_output=True, text=True)
        assert proc.returncode in (0, 1), proc.stdout + proc.stderr
        assert (base / name / "manifest.json").exists()
    return base
