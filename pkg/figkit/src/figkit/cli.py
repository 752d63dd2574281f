"""figkit command line: render experiment CSVs to figures."""

from __future__ import annotations

import argparse
import sys

from .render import FIGURES, FigureSpec, SchemaError, render


def build_parser():
    parser = argparse.ArgumentParser(prog="figkit")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render one figure from experiment CSVs")
    p.add_argument("--figure", required=True, choices=sorted(FIGURES))
    p.add_argument("--in", dest="inputs", required=True, nargs="+", help="input CSV path(s)")
    p.add_argument("--out", required=True, help="output image path")
    p.add_argument("--db", action="store_true", help="decibel vertical/horizontal axis")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        result = render(FigureSpec(figure=args.figure, inputs=tuple(args.inputs), output=args.out, db=args.db))
    except (SchemaError, FileNotFoundError) as exc:
        print(f"figkit: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {result.output}")
    return 0


def entry():
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
