import math

import numpy as np
import pytest

from ermconc import montecarlo as mc
from ermconc.bounds import ConcentrationParams
from ermconc.core import EstimationProblem, PointSet, RngSpec
from ermconc.problems import EuclideanBarycenterProblem

GRID = [25, 50, 100, 200]


class Deterministic(EstimationProblem):
    """Distance is exactly n**-rate, no randomness."""

    name = "synthetic"

    def __init__(self, rate=0.5, zero=False, fail_every=0):
        self.rate, self.zero, self.fail_every = rate, zero, fail_every

    def sample(self, rng, n):
        return np.full((n, 1), rng.uniform())

    def solve_empirical(self, batch):
        if self.fail_every and int(batch.samples[0, 0] * 1e6) % self.fail_every == 0:
            raise RuntimeError("synthetic failure")
        return PointSet([np.array([0.0 if self.zero else batch.n ** -self.rate])])

    def true_minimizers(self):
        return PointSet([np.array([0.0])])

    def distance(self, p, q):
        return float(abs(p[0] - q[0]))

    def params(self):
        return ConcentrationParams(beta=2, alpha=1, tau=1, psi1_a=1.0)


def test_record_counts_and_order():
    recs = mc.run_experiment(Deterministic(), GRID, 100, RngSpec(0))
    assert len(recs) == 400
    assert [(r.n, r.rep) for r in recs] == [(n, i) for n in GRID for i in range(100)]
    assert len({r.seed for r in recs}) == 400


def test_determinism_across_threads():
    prob = EuclideanBarycenterProblem()
    a = mc.run_experiment(prob, GRID, 100, RngSpec(3), threads=1)
    b = mc.run_experiment(prob, GRID, 100, RngSpec(3), threads=4)
    assert [(r.seed, r.distance) for r in a] == [(r.seed, r.distance) for r in b]


@pytest.mark.parametrize("rate", [0.5, 1.0])
def test_synthetic_slopes(rate):
    rep = mc.fit_rate(mc.run_experiment(Deterministic(rate), GRID, 100, RngSpec(0)))
    assert rep.slope == pytest.approx(-rate, abs=1e-12)
    assert rep.r2 == pytest.approx(1.0, abs=1e-12)
    assert rep.flags["rate_pass"] == (rate == 0.5)


def test_zero_median_is_an_error():
    recs = mc.run_experiment(Deterministic(zero=True), GRID, 100, RngSpec(0))
    with pytest.raises(ValueError, match="zero median"):
        mc.fit_rate(recs)


def test_grid_validation_and_min_reps():
    for bad in ([10, 20, 40], [10, 20, 40, 90], [10, 10, 10, 10]):
        with pytest.raises(ValueError):
            mc.run_experiment(Deterministic(), bad, 100, RngSpec(0))
    with pytest.raises(ValueError, match="reps below minimum 100"):
        mc.run_experiment(Deterministic(), GRID, 99, RngSpec(0))


def test_failures_are_recorded():
    recs = mc.run_experiment(Deterministic(fail_every=3), GRID, 100, RngSpec(0))
    bad = [r for r in recs if not r.ok]
    assert bad and all(r.status == "failed:RuntimeError" and math.isnan(r.distance) for r in bad)
    assert not mc.is_valid(recs)
    assert mc.is_valid(mc.run_experiment(Deterministic(), GRID, 100, RngSpec(0)))


def test_tail_compare_zero_variance():
    recs = mc.run_experiment(Deterministic(), [100, 200, 400, 800], 1000, RngSpec(0))
    at100 = [r for r in recs if r.n == 100]
    # constant distance 0.1; the bound with L = 1 at n = 100 is far above it
    tc = mc.tail_compare(at100, Deterministic().params(), [0.05, 0.1])
    assert tc.passed is True
    assert all(r.empirical == pytest.approx(0.1) for r in tc.rows)
    tiny = ConcentrationParams(beta=2, alpha=1, tau=1, psi1_a=1e-3)
    assert mc.tail_compare(at100, tiny, [0.05]).passed is False
    with pytest.raises(ValueError, match="single n"):
        mc.tail_compare(recs, tiny, [0.05])


def test_tail_compare_pre_asymptotic():
    recs = [r for r in mc.run_experiment(Deterministic(), [100, 200, 400, 800], 1000, RngSpec(0)) if r.n == 100]
    p = ConcentrationParams(beta=2, alpha=1, tau=1, psi1_a=1.0, kappa=0.9)
    tc = mc.tail_compare(recs, p, [0.05])
    assert tc.pre_asymptotic and tc.passed is None
    assert mc.tail_compare(recs, p, [0.05], p_n=0.0).passed is True
    with pytest.raises(ValueError, match="reps below minimum 1000"):
        mc.tail_compare(recs[:500], p, [0.05])


def test_expectation_check_euclidean():
    prob = EuclideanBarycenterProblem()
    recs = mc.run_experiment(prob, GRID, 2000, RngSpec(1))
    out = mc.expectation_check(recs, prob.trace, 2**8 * prob.rho_psi1**2, rtol=0.1)
    assert all(v["passed"] for v in out.values())


def test_report_json_nan_as_null():
    recs = mc.run_experiment(Deterministic(), GRID, 100, RngSpec(0))
    p = ConcentrationParams(beta=2, alpha=1, tau=1, psi1_a=1.0, kappa=lambda n: 5 * math.exp(-n / 50))
    rep = mc.fit_rate(recs, p)
    js = rep.to_json("abc")
    assert js["bound_curve"][0] is None and rep.pre_asymptotic == [25, 50]
    assert js["config_hash"] == "abc"
