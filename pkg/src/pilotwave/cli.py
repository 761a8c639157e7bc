"""Command-line front end.

    pilotwave <scenario> [--config FILE] [--seed N] [--out DIR] [--threads N]
    pilotwave selftest [--out DIR] [--threads N]

Without --config the bundled scenario config runs.  Exit codes: 0 all
built-in checks passed, 1 a check failed, 2 invalid config, 3 runtime
error.  --threads (or PILOTWAVE_THREADS) bounds intra-scenario worker
threads; results are schedule-independent because every stochastic stream
derives from (seed, member index).
"""

from __future__ import annotations

import argparse
import os
import sys
from importlib import resources
from pathlib import Path

from .errors import ConfigError, PilotwaveError
from .scenarios import SCENARIO_NAMES, parse_config, run_scenario

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def bundled_config_text(scenario: str) -> str:
    return (resources.files("pilotwave") / "configs" / f"{scenario}.json").read_text()


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="pilotwave",
        description="Pilot-wave dynamics laboratory: deterministic scenario runs "
                    "with machine-readable outputs and built-in checks.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SCENARIO_NAMES + ("selftest",):
        p = sub.add_parser(name, help=f"run the {name} scenario"
                           if name != "selftest" else "run every bundled scenario")
        if name != "selftest":
            p.add_argument("--config", type=Path, default=None,
                           help="JSON config (defaults to the bundled scenario config)")
            p.add_argument("--seed", type=int, default=None,
                           help="override the config seed")
        p.add_argument("--out", type=Path, default=None,
                       help="output directory (default: ./runs/<scenario>)")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads (fallback: PILOTWAVE_THREADS, default 1)")
    return parser


def _resolve_threads(arg) -> int:
    if arg is not None:
        return max(1, int(arg))
    env = os.environ.get("PILOTWAVE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError([f"PILOTWAVE_THREADS: not an integer ({env!r})"])
    return 1


def _run_one(scenario: str, config_path, seed_override, out_dir, threads) -> int:
    if config_path is not None:
        try:
            text = Path(config_path).read_text()
        except OSError as exc:
            raise ConfigError([f"cannot read config: {exc}"])
    else:
        text = bundled_config_text(scenario)
    cfg = parse_config(text, expected_scenario=scenario)
    if seed_override is not None:
        if seed_override < 0 or seed_override > 2**64 - 1:
            raise ConfigError(["--seed: must be an unsigned 64-bit integer"])
        cfg.seed = seed_override
    out = Path(out_dir) if out_dir is not None else (
        Path(cfg.output_dir) if cfg.output_dir else Path("runs") / scenario)
    passed, manifest = run_scenario(cfg, out, threads=threads)
    status = "PASS" if passed else "FAIL"
    print(f"[{status}] {scenario}: outputs in {out} (manifest {manifest.name})")
    return EXIT_OK if passed else EXIT_CHECK_FAILED


def _run_selftest(out_dir, threads) -> int:
    base = Path(out_dir) if out_dir is not None else Path("runs") / "selftest"
    worst = EXIT_OK
    for name in SCENARIO_NAMES:
        cfg = parse_config(bundled_config_text(name), expected_scenario=name)
        passed, _ = run_scenario(cfg, base / name, threads=threads)
        print(f"[{'PASS' if passed else 'FAIL'}] {name}")
        if not passed:
            worst = EXIT_CHECK_FAILED
    return worst


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        threads = _resolve_threads(args.threads)
        if args.command == "selftest":
            return _run_selftest(args.out, threads)
        return _run_one(args.command, args.config, args.seed, args.out, threads)
    except ConfigError as exc:
        for line in exc.violations:
            print(f"config error: {line}", file=sys.stderr)
        return EXIT_CONFIG
    except PilotwaveError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
