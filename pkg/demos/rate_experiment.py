"""Median distance against n for the Euclidean and spider barycenters.

Run: python3 demos/rate_experiment.py
A slope near -1/2 on the log-log scale is the parametric rate.
"""
import numpy as np

from ermconc import montecarlo as mc, problems
from ermconc.core import RngSpec

GRID = [25, 100, 400, 1600]


def main():
    for name in ("euclidean", "spider"):
        prob = problems.PROBLEMS[name]()
        recs = mc.run_experiment(prob, GRID, 500, RngSpec(1))
        rep = mc.fit_rate(recs, prob.params())
        print(f"{name}: slope {rep.slope:.3f}, r2 {rep.r2:.4f}")
        for n, med, b in zip(rep.n_grid, rep.quantiles["0.5"], rep.bound_curve):
            print(f"  n={n:<5} median={med:.4f}  bound(delta=0.05)={b:.3f}  ratio={b / med:.0f}")
        print(f"  n * E|d|^2 = {np.round(np.array(rep.mean_sq) * GRID, 4)}")


if __name__ == "__main__":
    main()
