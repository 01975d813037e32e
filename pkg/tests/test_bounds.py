import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ermconc.bounds import (BoundQuery, ConcentrationParams, bound_curve, corollary_b2a1_probability,
                            corollary_expectation_b2a1, derive_constants, expectation_bound, theorem_bound)

# tests/oracles/derive.py: beta=1.5, alpha=1, L=1, diam=0, n=1e4, delta=0.05, p_n=1e-6
B15_BOUND = 3.2966791609005874


def hadamard(L=1.0, diam=0.0, pn=0.0):
    return ConcentrationParams(beta=2, alpha=1, tau=1, psi1_a=L, diam_s=diam, eta=pn)


def test_constants_b2_a1():
    dc = derive_constants(hadamard(L=2.0, diam=3.0))
    assert (dc.q, dc.Q, dc.s, dc.c1, dc.c2) == (1, 1, 1, 64, 8)
    assert dc.K == pytest.approx(4 * (3.0 / 2.0 + 8))
    assert derive_constants(hadamard()).K == 32


def test_constants_b15_a1():
    p = ConcentrationParams(beta=1.5, alpha=1, tau=1, psi1_a=1)
    dc = derive_constants(p)
    assert (dc.q, dc.Q, dc.s) == (0.5, 1, 1)
    assert dc.c1 == pytest.approx(1728, rel=1e-14)
    assert dc.c2 == pytest.approx(128, rel=1e-14)
    assert dc.K == pytest.approx(512, rel=1e-14)


def test_theorem_b15_pinned():
    p = ConcentrationParams(beta=1.5, alpha=1, tau=1, psi1_a=1)
    v = theorem_bound(p, derive_constants(p), BoundQuery(10**4, 0.05, 1e-6))
    assert v.value == pytest.approx(B15_BOUND, rel=1e-12)
    assert v.probability == pytest.approx(1 - 1e-6 - 0.05)


def test_regime_errors():
    with pytest.raises(ValueError, match="theorem regime violated"):
        derive_constants(ConcentrationParams(beta=1, alpha=1, tau=1))
    with pytest.raises(ValueError, match="theorem regime violated"):
        derive_constants(ConcentrationParams(beta=3.5, alpha=1, tau=1))
    with pytest.raises(ValueError):
        derive_constants(ConcentrationParams(beta=2, alpha=1, tau=0))
    with pytest.raises(ValueError, match="exceeds 3/4"):
        BoundQuery(100, 0.05, 0.8)


def test_corollary_examples():
    assert corollary_b2a1_probability(1, 0, 100, math.exp(-1), 0) == pytest.approx(2.48)
    assert corollary_b2a1_probability(0, 0, 100, 0.05, 0.1) == 0.0
    rho = 0.7
    n, d = 400, 0.05
    lg = math.log(1 / d)
    expected = 16 * rho * (n**-0.5 + 2 * math.sqrt(lg / n) + lg / n)
    assert corollary_b2a1_probability(2 * rho, 0, n, d, 0) == pytest.approx(expected, rel=1e-14)


def test_corollary_dominates_theorem():
    for L in (0.1, 1.0, 7.0):
        for n in (10, 100, 10**4):
            for d in (0.5, 0.05, 1e-4):
                p = hadamard(L)
                th = theorem_bound(p, derive_constants(p), BoundQuery(n, d)).value
                co = corollary_b2a1_probability(L, 0, n, d, 0)
                assert co >= th
                # the exact constant 2e replaces the rounded 8 in the deviation terms
                lg = math.log(1 / d)
                assert th == pytest.approx(L * (8 / math.sqrt(n) + 2 * math.e * (2 * math.sqrt(lg / n) + lg / n)))


def test_expectation_forms():
    for L, diam, pn in ((1.0, 0.0, 0.0), (2.5, 0.0, 0.01), (0.3, 4.0, 0.2)):
        p = hadamard(L, diam)
        dc = derive_constants(p)
        for n in (10, 1000):
            a = expectation_bound(p, dc, n, pn)
            b = corollary_expectation_b2a1(L, diam, n, pn)
            assert a == pytest.approx(b, rel=1e-12)
    rho = 1.3
    p = hadamard(2 * rho)
    assert expectation_bound(p, derive_constants(p), 50, 0) == pytest.approx(2**8 * rho**2 / 50, rel=1e-14)


def test_delta_one_limit_and_vanishing():
    p = hadamard(1.0)
    dc = derive_constants(p)
    assert theorem_bound(p, dc, BoundQuery(10**12, 1.0)).value < 1e-5


@settings(max_examples=60, deadline=None)
@given(st.floats(1.05, 2.9), st.floats(0.01, 0.99), st.floats(0.1, 10), st.floats(0, 0.5))
def test_monotonicity(beta, delta, L, pn):
    p = ConcentrationParams(beta=beta, alpha=1, tau=1, psi1_a=L, diam_s=1.0)
    dc = derive_constants(p)
    f = lambda n, d, pn_: theorem_bound(p, dc, BoundQuery(n, d, pn_)).value
    if beta - 1 <= 1:  # n^(1 - 1/Q) = 1: the bound decreases in n
        assert f(200, delta, pn) <= f(100, delta, pn) * (1 + 1e-12)
    assert f(100, delta, min(0.75, pn + 0.1)) >= f(100, delta, pn)
    assert f(100, delta / 2, pn) >= f(100, delta, pn)
    p2 = ConcentrationParams(beta=beta, alpha=1, tau=1, psi1_a=2 * L, diam_s=1.0)
    assert theorem_bound(p2, derive_constants(p2), BoundQuery(100, delta, pn)).value >= f(100, delta, pn)


def test_s_continuous_positive_near_upper_edge():
    gaps = np.linspace(1.0, 1.999, 200)
    s = [derive_constants(ConcentrationParams(beta=1 + g, alpha=1, tau=1, psi1_a=1)).s for g in gaps]
    assert all(v > 0 for v in s)
    assert np.max(np.abs(np.diff(s))) < 0.01


def test_bound_curve_marks_pre_asymptotic():
    p = ConcentrationParams(beta=2, alpha=1, tau=1, psi1_a=1, kappa=lambda n: 5 * math.exp(-n / 100))
    c = bound_curve(p, [25, 100, 400, 1600], 0.05)
    assert math.isnan(c[0]) and math.isnan(c[1]) and np.all(np.isfinite(c[2:]))
