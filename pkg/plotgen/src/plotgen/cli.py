"""Command-line figure rendering: ``plotgen --kind curves|violins --env N --in csv --out svg``."""

from __future__ import annotations

import argparse
import json
import sys

from .figures import render_curves, render_violins


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plotgen",
        description="Render benchmark figures (learning curves, constraint-step violins) from tidy CSVs",
    )
    parser.add_argument("--kind", choices=["curves", "violins"], required=True)
    parser.add_argument("--env", type=int, required=True, help="environment id to plot")
    parser.add_argument("--in", dest="input", required=True, help="input CSV path")
    parser.add_argument("--out", required=True, help="output image path (SVG by default)")
    parser.add_argument(
        "--target",
        type=float,
        help="revenue target line (required for violins; comes from the constraint)",
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.kind == "curves":
        stats = render_curves(args.input, args.env, args.out)
    else:
        if args.target is None:
            print("error: --target is required for violin figures", file=sys.stderr)
            return 2
        stats = render_violins(args.input, args.env, args.target, args.out)
    print(json.dumps(stats, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
