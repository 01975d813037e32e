"""Bound values for every built-in problem at a few sample sizes.

Run: python3 demos/bound_table.py
Problems whose failure probability p_n exceeds 3/4 print "pre-asymptotic".
"""
import math

from ermconc import problems
from ermconc.bounds import BoundQuery, corollary_b2a1_probability, derive_constants, theorem_bound

NS = (100, 400, 1600, 10**5, 10**7)


def main():
    print("problem      L          " + "  ".join(f"n={n:<9}" for n in NS))
    for name, cls in problems.PROBLEMS.items():
        p = cls().params()
        dc = derive_constants(p)
        cells = []
        for n in NS:
            pn = p.p_n_raw(n)
            if pn > 0.75:
                cells.append("pre-asymp. ")
                continue
            v = corollary_b2a1_probability(p.L, p.diam_s, n, 0.05, pn)
            assert v >= theorem_bound(p, dc, BoundQuery(n, 0.05, pn)).value
            cells.append(f"{v:<11.4g}")
        print(f"{name:<12} {p.L:<10.4g} " + "  ".join(cells))


if __name__ == "__main__":
    main()
