"""Figure rendering from the command line.

Either point --spec at a JSON file whose keys mirror FigureSpec, or pass the
fields directly as flags:

    sivi-plot --csv runs/a/stats.csv --csv runs/b/stats.csv \
              --label "eta=2" --label "eta=4" --metric gap_norm \
              --x iteration --out figures/compare.png
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .figures import X_AXIS_CHOICES, FigureSpec, PlotDataError, plot_mean_ci


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sivi-plot", description="Render benchmark CSVs into figures.")
    parser.add_argument("--spec", help="JSON file with FigureSpec fields")
    parser.add_argument("--csv", action="append", default=[], help="input CSV (repeatable)")
    parser.add_argument("--label", action="append", default=[], help="series label (repeatable)")
    parser.add_argument("--metric", default="gap_norm")
    parser.add_argument("--x", choices=X_AXIS_CHOICES, default="iteration", dest="x_axis")
    parser.add_argument("--logy", action=argparse.BooleanOptionalAction, default=True)
    parser.add_argument("--logx", action=argparse.BooleanOptionalAction, default=False)
    parser.add_argument("--title", default=None)
    parser.add_argument("--out", help="output image path")
    return parser


def spec_from_args(args) -> FigureSpec:
    if args.spec:
        payload = json.loads(Path(args.spec).read_text(encoding="utf-8"))
        return FigureSpec(**payload)
    if not args.csv or not args.out:
        raise PlotDataError("either --spec or both --csv and --out are required")
    return FigureSpec(
        csv_paths=args.csv,
        output_path=args.out,
        metric=args.metric,
        x_axis=args.x_axis,
        log_y=args.logy,
        log_x=args.logx,
        labels=args.label or None,
        title=args.title,
    )


def cli_main(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        output = plot_mean_ci(spec_from_args(args))
    except (PlotDataError, OSError, json.JSONDecodeError, TypeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    print(f"wrote {output}")
    return 0


def main() -> None:
    sys.exit(cli_main(sys.argv[1:]))


if __name__ == "__main__":
    main()
