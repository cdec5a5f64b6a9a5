"""Command-line interface.

    paqt-fig --figure fig2 --in results/fig2 --out fig2.png

Exit codes: 0 success, 2 usage or input-schema error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .io import EmptyDataError, SchemaError
from .render import FIGURE_IDS, FigureSpec, render


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="paqt-fig", description=__doc__.splitlines()[0])
    parser.add_argument("--figure", required=True, choices=FIGURE_IDS, help="figure layout")
    parser.add_argument(
        "--in", dest="input_dir", required=True, type=Path, help="harness output directory"
    )
    parser.add_argument("--out", required=True, type=Path, help="output PNG path")
    parser.add_argument("--x-scale", choices=("linear", "log"), help="override x-axis scale")
    parser.add_argument("--y-scale", choices=("linear", "log"), help="override y-axis scale")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    spec = FigureSpec(
        figure=args.figure,
        input_dir=args.input_dir,
        output=args.out,
        x_scale=args.x_scale,
        y_scale=args.y_scale,
    )
    try:
        path = render(spec)
    except (SchemaError, EmptyDataError) as exc:
        print(f"paqt-fig: input error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"paqt-fig: error: {exc}", file=sys.stderr)
        return 3
    print(path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
