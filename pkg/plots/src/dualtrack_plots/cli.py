"""Command line for rendering convergence figures.

Either drive it from a spec file::

    dualtrack-plot --spec figure.json

with ``{"series": [{"path": "...csv", "label": "..."}], "out": "fig.png",
"x_axis": "both", "log_y": true}``, or pass traces positionally::

    dualtrack-plot a.csv b.csv --x grad_steps --out fig.png --label A --label B

Labels default to the file stems.  Exit code 0 on success, 1 on bad usage or
malformed input.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .render import FigureSpec, PlotInputError, SeriesSpec, render


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="dualtrack-plot", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("csvs", nargs="*", type=Path, help="trace CSV files")
    parser.add_argument("--spec", type=Path, help="figure spec JSON")
    parser.add_argument("--x", choices=["grad_steps", "comm_rounds", "both"],
                        default="both", help="x axis selection")
    parser.add_argument("--out", type=Path, help="output image path")
    parser.add_argument("--label", action="append", default=None,
                        help="series label, repeatable, one per CSV")
    parser.add_argument("--linear-y", action="store_true",
                        help="linear instead of log y axis")
    return parser


def _spec_from_args(args) -> FigureSpec:
    if args.spec is not None:
        if args.csvs or args.out is not None:
            raise ValueError("--spec cannot be combined with positional CSVs/--out")
        try:
            data = json.loads(args.spec.read_text())
        except FileNotFoundError:
            raise ValueError(f"spec file not found: {args.spec}")
        except json.JSONDecodeError as exc:
            raise ValueError(f"spec is not valid JSON: {exc}")
        return FigureSpec.from_dict(data)
    if not args.csvs:
        raise ValueError("give trace CSVs (or --spec)")
    if args.out is None:
        raise ValueError("--out is required with positional CSVs")
    labels = args.label if args.label is not None else [p.stem for p in args.csvs]
    if len(labels) != len(args.csvs):
        raise ValueError(f"{len(args.csvs)} CSVs but {len(labels)} labels")
    series = tuple(
        SeriesSpec(path=str(p), label=lab) for p, lab in zip(args.csvs, labels)
    )
    return FigureSpec(series=series, out=str(args.out), x_axis=args.x,
                      log_y=not args.linear_y)


def cli(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        spec = _spec_from_args(args)
        png, svg = render(spec)
    except (ValueError, PlotInputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {png} and {svg}")
    return 0


def main() -> None:
    raise SystemExit(cli())
