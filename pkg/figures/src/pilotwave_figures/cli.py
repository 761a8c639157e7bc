"""figures --spec <json>: render one figure from pilotwave run outputs.

Exit codes: 0 rendered, 2 invalid spec or stale/empty inputs, 3 unexpected
runtime error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .render import render
from .spec import EmptyInputError, FigureSpec, SpecError, StaleInputError


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="figures",
                                     description="Render figures from pilotwave run outputs.")
    parser.add_argument("--spec", type=Path, required=True,
                        help="figure spec JSON (kind, inputs, output, manifest, style)")
    args = parser.parse_args(argv)
    try:
        spec = FigureSpec.from_json(args.spec.read_text())
        sidecar = render(spec)
    except (SpecError, StaleInputError, EmptyInputError, OSError) as exc:
        print(f"figures: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover
        print(f"figures: unexpected error: {exc}", file=sys.stderr)
        return 3
    print(f"rendered {spec.kind}: {sidecar['outputs'][0]} "
          f"({sidecar['rows_plotted']} rows)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
