#!/usr/bin/env python3
"""Regenerate the load-vs-memory curve families (K=4, N=20, five aspect
ratios) as CSV + SVG, optionally with a simulated overlay for one scheme.

The CSV files match tests/golden/ byte for byte when run with the defaults.
"""

from __future__ import annotations

import argparse
from fractions import Fraction
from pathlib import Path

from matcache import harness

RATIOS = ("1/10", "1/2", "1", "2", "10")


def slug(a_text: str) -> str:
    return a_text.replace("/", "_")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="out", help="output directory (default ./out)")
    parser.add_argument("--K", type=int, default=4)
    parser.add_argument("--N", type=int, default=20)
    parser.add_argument("--grid", type=int, default=40)
    parser.add_argument(
        "--simulate",
        choices=harness.SCHEME_NAMES,
        help="overlay simulated loads for this scheme where realizable",
    )
    args = parser.parse_args()

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for a_text in RATIOS:
        a = Fraction(a_text)
        rows = harness.curve_rows(
            args.K, args.N, a, grid=args.grid, simulate_scheme=args.simulate
        )
        base = out_dir / f"curves_K{args.K}_N{args.N}_a{slug(a_text)}"
        harness.write_curve_csv(base.with_suffix(".csv"), rows)
        title = f"K={args.K}, N={args.N}, a={a_text}"
        harness.atomic_write_text(base.with_suffix(".svg"), harness.curve_svg(rows, title))
        print(f"wrote {base}.csv and {base}.svg")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
