"""CLI: etalab-plot <spec.json>

The spec file holds one plot description (or a list of them):
    {"kind": "heatmap", "input": "out/corr_matrix.csv", "output": "fig.png"}

Exit codes: 0 ok, 2 invalid spec or input.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .render import PlotError, PlotSpec, render


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="etalab-plot", description="Render etalab CSV outputs as PNG figures"
    )
    parser.add_argument("spec", type=Path, help="JSON plot spec (object or list)")
    args = parser.parse_args(argv)
    try:
        data = json.loads(args.spec.read_text())
    except FileNotFoundError:
        print(f"spec file not found: {args.spec}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print(f"invalid JSON in {args.spec}: {exc}", file=sys.stderr)
        return 2
    specs = data if isinstance(data, list) else [data]
    try:
        for entry in specs:
            out = render(PlotSpec.from_dict(entry))
            print(f"wrote {out}")
    except PlotError as exc:
        print(f"plot error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
