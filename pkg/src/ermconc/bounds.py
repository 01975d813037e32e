"""Bound calculus for empirical minimizers: derived constants, the general
concentration bound, the beta=2 / alpha=1 corollary and expectation bounds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

E = math.e
RateFn = Union[float, Callable[[float], float]]


def _as_fn(v: RateFn) -> Callable[[float], float]:
    if callable(v):
        return v
    c = float(v)
    return lambda n: c


@dataclass(frozen=True)
class ConcentrationParams:
    """Assumption tuple of one estimation problem.

    ``eta``, ``kappa`` and ``iota`` are the failure probabilities of the
    high-probability events, either constants or functions of n.
    """

    beta: float
    alpha: float
    tau: float
    j0: float = math.inf
    psi1_a: float = 0.0
    diam_s: float = 0.0
    eta: RateFn = 0.0
    kappa: RateFn = 0.0
    iota: RateFn = 0.0

    def p_n_raw(self, n: float) -> float:
        """eta(n) + kappa(n) + iota(n), unclamped (lies in [0, 3])."""
        return float(_as_fn(self.eta)(n) + _as_fn(self.kappa)(n) + _as_fn(self.iota)(n))

    def p_n(self, n: float) -> float:
        """Clamped failure probability min(1, eta + kappa + iota)."""
        return min(1.0, max(0.0, self.p_n_raw(n)))

    @property
    def L(self) -> float:
        return self.psi1_a / self.tau


@dataclass(frozen=True)
class DerivedConstants:
    q: float
    Q: float
    s: float
    L: float
    K: float
    c1: float
    c2: float


@dataclass(frozen=True)
class BoundQuery:
    n: float
    delta: float
    p_n: float = 0.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not (0.0 < self.delta <= 1.0):
            raise ValueError("delta must lie in (0, 1]")
        _check_pn(self.p_n)


@dataclass(frozen=True)
class BoundValue:
    """A bound on theta(S_hat; S) with its confidence level and the p_n term."""

    value: float
    probability: float
    main_term: float
    pn_term: float


def _check_pn(p_n: float) -> None:
    if p_n < 0:
        raise ValueError("p_n must be nonnegative")
    if p_n > 0.75:
        raise ValueError(f"theorem regime violated: p_n = {p_n:.6g} exceeds 3/4")


def _check_regime(beta: float, alpha: float) -> float:
    gap = beta - alpha
    if gap == 0:
        raise ValueError("theorem regime violated: beta == alpha is not covered (need 0 < beta - alpha < 2)")
    if not (0.0 < gap < 2.0):
        raise ValueError(f"theorem regime violated: beta - alpha = {gap:.6g} outside (0, 2)")
    return gap


def derive_constants(p: ConcentrationParams) -> DerivedConstants:
    """Constants q, Q, s, L, K, c1, c2 of the concentration theorem.

    q = min(beta - alpha, 1), Q = max(beta - alpha, 1),
    s = min(1, 2/(beta - alpha) - 1), L = ||a||_psi1 / tau,
    c1 = (4 beta/(beta - alpha))^(beta/(beta - alpha)),
    c2 = 2 max(4 alpha/(beta - alpha), 1)^(alpha/(beta - alpha)),
    K = 2^(max(0, alpha - 1) + 2) (L^(-alpha/(beta - alpha)) diam^alpha + c2).
    """
    if p.tau <= 0:
        raise ValueError("tau must be positive")
    gap = _check_regime(p.beta, p.alpha)
    a, b = p.alpha, p.beta
    q = min(gap, 1.0)
    Q = max(gap, 1.0)
    s = min(1.0, 2.0 / gap - 1.0)
    L = p.psi1_a / p.tau
    c1 = (4.0 * b / gap) ** (b / gap)
    c2 = 2.0 * max(4.0 * a / gap, 1.0) ** (a / gap)
    if p.diam_s == 0:
        diam_term = 0.0
    elif L == 0:
        diam_term = math.inf
    else:
        diam_term = L ** (-a / gap) * p.diam_s**a
    K = 2.0 ** (max(0.0, a - 1.0) + 2.0) * (diam_term + c2)
    return DerivedConstants(q=q, Q=Q, s=s, L=L, K=K, c1=c1, c2=c2)


def p_n_coefficient(p: ConcentrationParams, dc: DerivedConstants, n: float) -> float:
    """C = L^(1/Q) (K^(q/beta) + 2^(2+1/Q) n^(1-1/Q))."""
    return dc.L ** (1.0 / dc.Q) * (dc.K ** (dc.q / p.beta) + 2.0 ** (2.0 + 1.0 / dc.Q) * n ** (1.0 - 1.0 / dc.Q))


def theorem_terms(p: ConcentrationParams, dc: DerivedConstants, query: BoundQuery) -> tuple:
    """(main, C * p_n^(q/(2 beta))) terms of the bound on theta^q."""
    _check_regime(p.beta, p.alpha)
    n, lg = float(query.n), -math.log(query.delta)
    q, Q, s, L = dc.q, dc.Q, dc.s, dc.L
    LQ = L ** (1.0 / Q)
    main = LQ * (dc.c1 ** (q / p.beta) * n ** (-p.alpha / (p.beta * Q))
                 + 2.0 ** (1.0 / Q) * E * (2.0 * math.sqrt(n**-s * lg) + n**-s * lg))
    pn_term = p_n_coefficient(p, dc, n) * query.p_n ** (q / (2.0 * p.beta)) if query.p_n > 0 else 0.0
    return main, pn_term


def theorem_bound(p: ConcentrationParams, dc: DerivedConstants, query: BoundQuery) -> BoundValue:
    """Bound on theta(S_hat; S) from the general concentration theorem.

    The theorem bounds theta^q; the q-th root is reported so results are in
    distance units.  The constant 2^(1/Q) e is kept exact.  ``pn_term`` is
    the contribution of C p_n^(q/(2 beta)) in theta^q units.
    """
    main, pn_term = theorem_terms(p, dc, query)
    total = (main + pn_term) ** (1.0 / dc.q)
    return BoundValue(total, max(0.0, 1.0 - query.p_n - query.delta), main, pn_term)


def corollary_b2a1_probability(L: float, diam_s: float, n: float, delta: float, p_n: float) -> float:
    """8L(n^-1/2 + 2 sqrt(ln(1/delta)/n) + ln(1/delta)/n) + (14L + 2 sqrt(L diam)) p_n^(1/4).

    Uses the rounded constants of the beta=2, alpha=1 corollary verbatim.
    """
    _check_pn(p_n)
    if not (0.0 < delta <= 1.0):
        raise ValueError("delta must lie in (0, 1]")
    if L < 0 or diam_s < 0:
        raise ValueError("L and diam_s must be nonnegative")
    lg = -math.log(delta)
    main = 8.0 * L * (n**-0.5 + 2.0 * math.sqrt(lg / n) + lg / n)
    return main + (14.0 * L + 2.0 * math.sqrt(L * diam_s)) * p_n**0.25


def expectation_bound(p: ConcentrationParams, dc: DerivedConstants, n: float, p_n: float) -> float:
    """Bound on E[theta^beta | good event]: L^(beta/(beta-alpha)) (c1 n^(-alpha/(beta-alpha)) + K sqrt(p_n))."""
    _check_pn(p_n)
    gap = _check_regime(p.beta, p.alpha)
    Kterm = dc.K * math.sqrt(p_n) if p_n > 0 else 0.0
    return dc.L ** (p.beta / gap) * (dc.c1 * n ** (-p.alpha / gap) + Kterm)


def corollary_expectation_b2a1(L: float, diam_s: float, n: float, p_n: float) -> float:
    """2^6 L^2 / n + 4 (L diam + 8 L^2) sqrt(p_n)."""
    _check_pn(p_n)
    return 64.0 * L * L / n + 4.0 * (L * diam_s + 8.0 * L * L) * math.sqrt(p_n)


def bound_curve(p: ConcentrationParams, n_grid, delta: float, use_corollary: bool = True) -> np.ndarray:
    """Bound on theta at each n, or nan where p_n(n) leaves the theorem regime."""
    out = []
    for n in n_grid:
        pn = p.p_n_raw(n)
        if pn > 0.75:
            out.append(math.nan)
            continue
        if use_corollary and p.beta == 2 and p.alpha == 1:
            out.append(corollary_b2a1_probability(p.L, p.diam_s, n, delta, pn))
        else:
            dc = derive_constants(p)
            out.append(theorem_bound(p, dc, BoundQuery(n, delta, pn)).value)
    return np.asarray(out, float)
