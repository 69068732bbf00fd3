#!/usr/bin/env python3
"""Render the minimal-sample-exponent figure from fig1_agg.csv."""
import sys

from plotlib import PlotSpec, SchemaError, make_arg_parser, render


def main(argv=None) -> int:
    args = make_arg_parser(__doc__).parse_args(argv)
    try:
        out = render(PlotSpec(input=args.input, kind="fig1",
                              output=args.output, fmt=args.format))
    except (SchemaError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
