"""lambda_1 and the gap under mesh refinement, with observed orders.

    python3 scripts/convergence_study.py --domain disk:1 --alpha 1 --levels 8 16 32
"""

import argparse
import math

from stablegap.geometry import parse_domain
from stablegap.operator import KILLING_RULES, assemble
from stablegap.spectral import eigenpairs


def observed_order(v0, v1, v2):
    d0, d1 = v1 - v0, v2 - v1
    if d0 == 0 or d1 == 0 or d0 / d1 <= 0:
        return math.nan
    return math.log2(d0 / d1)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--domain", default="disk:1")
    ap.add_argument("--alpha", type=float, default=1.0)
    ap.add_argument("--levels", type=int, nargs="+", default=[8, 16, 32],
                    help="cells per inradius")
    ap.add_argument("--killing", choices=KILLING_RULES, default="domain")
    args = ap.parse_args()

    dom = parse_domain(args.domain)
    rows = []
    print("h,n,lambda1,gap")
    for cells in args.levels:
        h = dom.inradius() / cells
        spec = eigenpairs(assemble(dom, args.alpha, h, killing=args.killing), 4)
        rows.append((spec.values[0], spec.gap))
        print(f"{h:.6g},{spec.grid.n},{spec.values[0]:.10g},{spec.gap:.10g}")
    for i in range(len(rows) - 2):
        p1 = observed_order(*(r[0] for r in rows[i:i + 3]))
        p2 = observed_order(*(r[1] for r in rows[i:i + 3]))
        print(f"# observed order, levels {args.levels[i]}-{args.levels[i + 2]}: "
              f"lambda1 {p1:.3f}, gap {p2:.3f}")


if __name__ == "__main__":
    main()
