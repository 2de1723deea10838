"""Standalone plotting front end: ``plot <kind> --in FILE --out FILE``."""

from __future__ import annotations

import argparse
import sys

from .io import PlotError
from .plots import (
    plot_freq_distribution,
    plot_hitrate_curves,
    plot_miss_distance,
    plot_topic_popularity,
)
from .tables import render_gap_table

KINDS = {
    "hitrate_curves": ("results CSV", plot_hitrate_curves),
    "miss_distance": ("miss-distance CSV", plot_miss_distance),
    "freq_distribution": ("events TSV", plot_freq_distribution),
    "topic_popularity": ("topic popularity TSV", plot_topic_popularity),
    "gap_table": ("gaps CSV", None),
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="plot", description=__doc__)
    parser.add_argument("kind", choices=sorted(KINDS))
    parser.add_argument("--in", dest="input", required=True, help="input CSV/TSV path")
    parser.add_argument("--out", dest="output", required=True, help="output image or .md path")
    args = parser.parse_args(argv)

    try:
        if args.kind == "gap_table":
            render_gap_table(args.input, args.output)
        else:
            _, fn = KINDS[args.kind]
            fn(args.input, args.output)
    except PlotError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(args.output)
    return 0


if __name__ == "__main__":
    sys.exit(main())
