#!/usr/bin/env python3
"""Render the loss-comparison phase-transition figure from fig2_agg.csv."""
import sys

from plotlib import PlotSpec, SchemaError, make_arg_parser, render


def main(argv=None) -> int:
    parser = make_arg_parser(__doc__)
    parser.add_argument("--band-alpha", type=float, default=0.25,
                        help="opacity of the 30-70 percentile band")
    args = parser.parse_args(argv)
    try:
        out = render(PlotSpec(input=args.input, kind="fig2",
                              output=args.output, fmt=args.format,
                              band_alpha=args.band_alpha))
    except (SchemaError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
