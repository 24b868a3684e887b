"""Gap sweep over rectangle aspect ratios and stability indices, written as CSV.

    python3 scripts/sweep_gaps.py --alphas 0.5 1 1.5 --ratios 1 2 4 8 > gaps.csv
"""

import argparse
import csv
import sys

from stablegap import bounds
from stablegap.geometry import Rectangle


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alphas", type=float, nargs="+", default=[0.5, 1.0, 1.5])
    ap.add_argument("--ratios", type=float, nargs="+", default=[1, 2, 4, 8])
    ap.add_argument("--b", type=float, default=1.0, help="short half-width")
    ap.add_argument("--cells", type=int, default=8, help="cells per short half-width (coarse level)")
    args = ap.parse_args()

    out = csv.writer(sys.stdout)
    out.writerow(["alpha", "a", "b", "gap_h", "gap_h2", "gap", "budget",
                  "rectangle_lower", "rectangle_upper", "universal_lower"])
    for alpha in args.alphas:
        for q in args.ratios:
            dom = Rectangle(q * args.b, args.b)
            rep = bounds.verify_bounds(dom, alpha, h=args.b / args.cells)
            out.writerow([alpha, dom.a, dom.b, *rep.gaps, rep.gap, rep.budget,
                          *(rep.bound(n).value for n in
                            ("rectangle_lower", "rectangle_upper", "universal_lower"))])
            sys.stdout.flush()


if __name__ == "__main__":
    main()
