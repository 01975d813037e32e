"""Replication engine, rate fits and tail comparisons against the bounds."""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .bounds import ConcentrationParams, bound_curve, corollary_b2a1_probability, derive_constants, theorem_bound, BoundQuery
from .core import EstimationProblem, RngSpec, replication_stream
from .orlicz import dkw_margin

MIN_REPS = 100
MIN_TAIL_REPS = 1000
MAX_FAILURE_RATE = 0.05
QUANTILE_LEVELS = (0.5, 0.9, 0.95)
RATE_WINDOW = (-0.6, -0.4)


@dataclass(frozen=True)
class ReplicationRecord:
    problem: str
    n: int
    rep: int
    seed: int
    distance: float
    status: str = "ok"
    millis: float = 0.0

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def _check_grid(n_grid: Sequence[int]) -> List[int]:
    ns = [int(n) for n in n_grid]
    if len(ns) < 4:
        raise ValueError("n_grid needs at least 4 points")
    if any(n < 1 for n in ns) or any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError("n_grid must be increasing positive integers")
    r = [b / a for a, b in zip(ns, ns[1:])]
    if max(r) - min(r) > 1e-9 * max(r):
        raise ValueError("n_grid must be geometric")
    return ns


def replicate(problem: EstimationProblem, n: int, rep: int, rng_spec: RngSpec) -> ReplicationRecord:
    """One replication; failures are captured in the status field."""
    spec = RngSpec(rng_spec.base_seed, replication_stream(n, rep))
    t0 = time.perf_counter()
    try:
        batch = problem.draw_batch(spec, n)
        dist, status = float(problem.estimation_error(batch)), "ok"
        if not (dist >= 0 and math.isfinite(dist)):
            dist, status = math.nan, "failed:bad-distance"
    except Exception as exc:  # a solver failure is data, not a crash
        dist, status = math.nan, f"failed:{type(exc).__name__}"
    return ReplicationRecord(getattr(problem, "name", type(problem).__name__), int(n), int(rep),
                             spec.seed64(), dist, status, 1e3 * (time.perf_counter() - t0))


def run_experiment(problem: EstimationProblem, n_grid: Sequence[int], reps: int, rng_spec: RngSpec,
                   threads: int = 1, min_reps: int = MIN_REPS) -> List[ReplicationRecord]:
    """``reps`` replications at each n, ordered by (n, rep).

    Replication (n, i) draws from stream (n << 32) | i of ``rng_spec.base_seed``,
    so the output does not depend on ``threads``.
    """
    if reps < min_reps:
        raise ValueError(f"reps below minimum {min_reps}")
    ns = _check_grid(n_grid)
    jobs = [(n, i) for n in ns for i in range(reps)]
    if threads <= 1:
        return [replicate(problem, n, i, rng_spec) for n, i in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda job: replicate(problem, job[0], job[1], rng_spec), jobs))


def failure_rates(records: Sequence[ReplicationRecord]) -> Dict[int, float]:
    out: Dict[int, List[int]] = {}
    for r in records:
        tot = out.setdefault(r.n, [0, 0])
        tot[0] += not r.ok
        tot[1] += 1
    return {n: f / t for n, (f, t) in sorted(out.items())}


def is_valid(records: Sequence[ReplicationRecord]) -> bool:
    """False when more than 5% of replications failed at some n."""
    return all(v <= MAX_FAILURE_RATE for v in failure_rates(records).values())


def distances_by_n(records: Sequence[ReplicationRecord]) -> Dict[int, np.ndarray]:
    out: Dict[int, list] = {}
    for r in records:
        if r.ok:
            out.setdefault(r.n, []).append(r.distance)
    return {n: np.asarray(v) for n, v in sorted(out.items())}


@dataclass
class RateReport:
    problem: str
    n_grid: List[int]
    quantiles: Dict[str, List[float]]
    mean: List[float]
    mean_sq: List[float]
    slope: float
    intercept: float
    r2: float
    bound_curve: List[float]
    bound_delta: float
    flags: Dict[str, Optional[bool]] = field(default_factory=dict)
    pre_asymptotic: List[int] = field(default_factory=list)

    def to_json(self, config_hash: str = "") -> dict:
        nan = lambda v: None if isinstance(v, float) and math.isnan(v) else v
        return {
            "config_hash": config_hash,
            "problem": self.problem,
            "n_grid": self.n_grid,
            "quantiles": {k: [nan(x) for x in v] for k, v in self.quantiles.items()},
            "mean": self.mean,
            "mean_sq": self.mean_sq,
            "slope": self.slope,
            "intercept": self.intercept,
            "r2": self.r2,
            "bound_delta": self.bound_delta,
            "bound_curve": [nan(x) for x in self.bound_curve],
            "pre_asymptotic": self.pre_asymptotic,
            "flags": self.flags,
        }


def _ols(x: np.ndarray, y: np.ndarray) -> tuple:
    X = np.column_stack([np.ones_like(x), x])
    (b0, b1), *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - (b0 + b1 * x)
    ss = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss if ss > 0 else 1.0
    return float(b1), float(b0), float(r2)


def fit_rate(records: Sequence[ReplicationRecord], params: Optional[ConcentrationParams] = None,
             delta: float = 0.05, confidence: float = 0.99) -> RateReport:
    """OLS of log median distance on log n, plus the bound curve at ``delta``.

    The tail flag compares the bound at each n with the empirical quantile of
    level 1 - p_n - delta - DKW margin.  Sizes where p_n > 3/4 have no bound
    and are listed as pre-asymptotic.
    """
    by_n = distances_by_n(records)
    ns = sorted(by_n)
    if len(ns) < 4:
        raise ValueError("need at least 4 distinct n values")
    med = np.array([np.median(by_n[n]) for n in ns])
    if np.any(med <= 0):
        raise ValueError("zero median: distances degenerate, rate undefined")
    slope, intercept, r2 = _ols(np.log(ns), np.log(med))
    quant = {f"{lv:g}": [float(np.quantile(by_n[n], lv)) for n in ns] for lv in QUANTILE_LEVELS}
    report = RateReport(
        problem=records[0].problem, n_grid=ns, quantiles=quant,
        mean=[float(by_n[n].mean()) for n in ns], mean_sq=[float(np.mean(by_n[n] ** 2)) for n in ns],
        slope=slope, intercept=intercept, r2=r2, bound_curve=[], bound_delta=delta,
    )
    report.flags["rate_pass"] = bool(RATE_WINDOW[0] <= slope <= RATE_WINDOW[1])
    report.flags["valid"] = is_valid(records)
    if params is not None:
        curve = bound_curve(params, ns, delta)
        report.bound_curve = [float(v) for v in curve]
        ok = []
        for n, b in zip(ns, curve):
            if math.isnan(b):
                report.pre_asymptotic.append(n)
                continue
            d = by_n[n]
            level = 1.0 - params.p_n_raw(n) - delta - dkw_margin(len(d), confidence)
            ok.append(level <= 0 or b >= np.quantile(d, level))
        report.flags["tail_pass"] = bool(ok) and all(ok)
    return report


def expectation_check(records: Sequence[ReplicationRecord], mse: float, mse_bound_coef: float,
                      rtol: float = 0.05) -> Dict[int, dict]:
    """Compare mean squared distance with ``mse``/n and with the bound ``mse_bound_coef``/n."""
    out = {}
    for n, d in distances_by_n(records).items():
        m = float(np.mean(d**2))
        out[n] = {"mean_sq": m, "predicted": mse / n, "bound": mse_bound_coef / n,
                  "passed": abs(m - mse / n) <= rtol * mse / n and m <= mse_bound_coef / n}
    return out


@dataclass(frozen=True)
class TailRow:
    delta: float
    level: float
    empirical: float
    bound: float
    margin: float
    passed: Optional[bool]


@dataclass
class TailComparison:
    n: int
    p_n: float
    rows: List[TailRow]
    pre_asymptotic: bool
    reps: int

    @property
    def passed(self) -> Optional[bool]:
        """True/False, or None when the bound is undefined (p_n > 3/4)."""
        if self.pre_asymptotic:
            return None
        return all(r.passed for r in self.rows)


def tail_compare(records: Sequence[ReplicationRecord], params: ConcentrationParams,
                 delta_grid: Sequence[float], confidence: float = 0.99,
                 p_n: Optional[float] = None, use_corollary: bool = True) -> TailComparison:
    """Bound against the empirical (1 - p_n - delta)-quantile at one n.

    The bound passes at delta when it is at least the empirical quantile of
    level 1 - p_n - delta - margin, margin being the DKW band at
    ``confidence``: the true quantile of that level lies below the
    nominal-level one with the stated confidence.  ``p_n`` overrides the problem's failure probability
    (pass 0 for the idealised comparison).
    """
    ns = {r.n for r in records}
    if len(ns) != 1:
        raise ValueError("tail_compare needs records at a single n")
    n = ns.pop()
    d = np.asarray([r.distance for r in records if r.ok])
    if d.size < MIN_TAIL_REPS:
        raise ValueError(f"reps below minimum {MIN_TAIL_REPS} for tail comparison")
    pn = params.p_n_raw(n) if p_n is None else float(p_n)
    margin = dkw_margin(d.size, confidence)
    if pn > 0.75:
        rows = [TailRow(float(dl), 1.0 - pn - dl, math.nan, math.nan, margin, None) for dl in delta_grid]
        return TailComparison(n, pn, rows, True, d.size)
    rows = []
    for dl in delta_grid:
        if use_corollary and params.beta == 2 and params.alpha == 1:
            b = corollary_b2a1_probability(params.L, params.diam_s, n, dl, pn)
        else:
            b = theorem_bound(params, derive_constants(params), BoundQuery(n, dl, pn)).value
        level = 1.0 - pn - dl
        adj = level - margin
        emp = float(np.quantile(d, adj)) if adj > 0 else 0.0
        rows.append(TailRow(float(dl), level, emp, float(b), margin, bool(b >= emp)))
    return TailComparison(n, pn, rows, False, d.size)


# ---------------------------------------------------------------------------
# bounded-difference scenarios for the McDiarmid checks


def _uniform(rng, shape):
    return rng.uniform(size=shape)


def _mean(X):
    return X.mean(axis=1)


@dataclass(frozen=True)
class McDiarmidScenario:
    """Sample mean of n Uniform[0, 1] draws, optionally with a jump off a good set.

    With ``jump`` > 0 the statistic gains ``jump`` whenever some draw exceeds
    c0 = (1 - p_bad)^(1/n), so that the good set {max X <= c0} has
    probability exactly 1 - p_bad while the global bounded-difference
    constant is destroyed.
    """

    n: int = 50
    jump: float = 0.0
    p_bad: float = 0.01

    @property
    def threshold(self) -> float:
        return (1.0 - self.p_bad) ** (1.0 / self.n)

    def statistic(self, X: np.ndarray) -> np.ndarray:
        if self.jump == 0:
            return _mean(X)
        return _mean(X) + self.jump * (X.max(axis=1) > self.threshold)

    def bad_set(self, X: np.ndarray) -> np.ndarray:
        return X.max(axis=1) > self.threshold

    def run(self, reps: int, t_grid: Sequence[float], rng: RngSpec, confidence: float = 0.99):
        from . import orlicz

        if self.jump == 0:
            psi = orlicz.psi1_uniform_centered().value
            return orlicz.mcdiarmid_simulate(self.statistic, _uniform, None, self.n, reps, t_grid, rng=rng,
                                             sigma=psi / math.sqrt(self.n), scale=psi / self.n,
                                             confidence=confidence)
        psi_b = orlicz.psi1_uniform_gap().value / self.n
        return orlicz.mcdiarmid_simulate(self.statistic, _uniform, self.bad_set, self.n, reps, t_grid, rng=rng,
                                         psi1_b=psi_b, p_bad=self.p_bad, confidence=confidence)
