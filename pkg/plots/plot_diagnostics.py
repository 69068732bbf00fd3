#!/usr/bin/env python3
"""Render a diagnostics figure (noise-norm scaling or power-check deviation).

The CSV kind is detected from the header: noise.csv or power.csv.
"""
import csv
import sys

from plotlib import SCHEMAS, PlotSpec, SchemaError, make_arg_parser, render


def detect_kind(path: str) -> str:
    with open(path, newline="") as fh:
        header = next(csv.reader(fh), [])
    for kind in ("noise", "power"):
        if header == SCHEMAS[kind]:
            return kind
    raise SchemaError(f"{path}: header {header} matches neither the noise "
                      f"nor the power schema")


def main(argv=None) -> int:
    args = make_arg_parser(__doc__).parse_args(argv)
    try:
        kind = detect_kind(args.input)
        out = render(PlotSpec(input=args.input, kind=kind,
                              output=args.output, fmt=args.format))
    except (SchemaError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
