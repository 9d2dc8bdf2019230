"""CLI: ``wald-plot --kind <k> --in <run dir> --out <figure file>``."""

from __future__ import annotations

import argparse
import sys

from wald_plots.io import SchemaError
from wald_plots.render import PLOT_KINDS, PlotJob, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wald-plot",
        description="Render harness CSV/JSON outputs into figures",
    )
    parser.add_argument("--kind", required=True, choices=PLOT_KINDS)
    parser.add_argument("--in", dest="input_dir", required=True,
                        help="run directory holding replications.csv / summary.json")
    parser.add_argument("--out", dest="output_path", required=True,
                        help="output figure path (.svg recommended)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        path = render(PlotJob(input_dir=args.input_dir, kind=args.kind,
                              output_path=args.output_path))
    except (SchemaError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
