"""Problem-agnostic building blocks: point sets, set-to-set distance,
the estimation-problem interface and reproducible random streams.
"""
from __future__ import annotations

import abc
from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np

# default absolute tolerance for real comparisons in verifiers
ATOL = 1e-9

Metric = Callable[[Any, Any], float]


@dataclass(frozen=True)
class PointSet:
    """Finite, non-empty collection of points sharing one coordinate shape.

    Points are stored as read-only numpy arrays so instances can be shared
    across concurrent replications.
    """

    points: tuple

    def __post_init__(self):
        pts = tuple(np.array(p, dtype=float, copy=True) for p in self.points)
        if len(pts) == 0:
            raise ValueError("empty point set")
        shape = pts[0].shape
        for p in pts:
            if p.shape != shape:
                raise ValueError(f"inconsistent point shapes: {p.shape} vs {shape}")
            p.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def of(cls, *points) -> "PointSet":
        return cls(tuple(points))

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    @property
    def shape(self) -> tuple:
        return self.points[0].shape


@dataclass(frozen=True)
class SampleBatch:
    """n i.i.d. draws from the data distribution, with the seed that made them.

    ``samples`` is an array whose leading axis indexes the draws; the
    remaining axes are problem specific.
    """

    samples: np.ndarray
    seed: int
    n: int = -1

    def __post_init__(self):
        s = np.asarray(self.samples)
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)
        if self.n < 0:
            object.__setattr__(self, "n", int(s.shape[0]))
        if s.shape[0] != self.n:
            raise ValueError(f"batch length {s.shape[0]} does not match n={self.n}")


@dataclass(frozen=True)
class RngSpec:
    """Counter-based stream identifier.

    The generator depends only on ``(base_seed, stream_id)``, never on the
    order in which streams are requested, so serial and parallel runs agree.
    """

    base_seed: int
    stream_id: int = 0

    def seed_sequence(self) -> np.random.SeedSequence:
        return np.random.SeedSequence(entropy=int(self.base_seed) & (2**64 - 1),
                                      spawn_key=(int(self.stream_id) & (2**64 - 1),))

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(self.seed_sequence()))

    def seed64(self) -> int:
        """Single 64-bit integer summarising the stream (for record keeping)."""
        return int(self.seed_sequence().generate_state(1, np.uint64)[0])

    def child(self, stream_id: int) -> "RngSpec":
        return RngSpec(self.base_seed, stream_id)


def replication_stream(n: int, rep: int) -> int:
    """Stream id of replication ``rep`` at sample size ``n``."""
    return (int(n) << 32) | int(rep)


class EstimationProblem(abc.ABC):
    """Sampler, empirical solver, true minimizer set and metric of one ERM problem."""

    name: str = "abstract"

    @abc.abstractmethod
    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw ``n`` i.i.d. samples; leading axis indexes the draws."""

    @abc.abstractmethod
    def solve_empirical(self, batch: SampleBatch) -> PointSet:
        """Minimizers of the empirical risk (deterministic given the batch)."""

    @abc.abstractmethod
    def true_minimizers(self) -> PointSet:
        ...

    @abc.abstractmethod
    def distance(self, p, q) -> float:
        ...

    @abc.abstractmethod
    def params(self):
        """Assumption constants as a :class:`ermconc.bounds.ConcentrationParams`."""

    def draw_batch(self, spec: RngSpec, n: int) -> SampleBatch:
        return SampleBatch(self.sample(spec.generator(), n), seed=spec.seed64(), n=n)

    def estimation_error(self, batch: SampleBatch) -> float:
        """theta(S_hat; S) for one batch."""
        return set_distance(self.solve_empirical(batch), self.true_minimizers(), self.distance)


def set_distance(a: PointSet | Sequence, b: PointSet | Sequence, metric: Metric) -> float:
    """Asymmetric sup-inf divergence: sup over p in a of inf over q in b of metric(p, q).

    It vanishes exactly when ``a`` is contained in ``b`` and is not symmetric.
    """
    a_pts = list(a.points if isinstance(a, PointSet) else a)
    b_pts = list(b.points if isinstance(b, PointSet) else b)
    if not a_pts or not b_pts:
        raise ValueError("empty point set")
    worst = 0.0
    for p in a_pts:
        best = min(float(metric(p, q)) for q in b_pts)
        worst = max(worst, best)
    return worst


def check_triangle(a, b, c, metric: Metric, slack: float = 1e-12) -> bool:
    """True iff theta(a;c) <= theta(a;b) + theta(b;c) + slack."""
    return set_distance(a, c, metric) <= set_distance(a, b, metric) + set_distance(b, c, metric) + slack


def euclidean(p, q) -> float:
    return float(np.linalg.norm(np.asarray(p, float) - np.asarray(q, float)))


def check_metric_axioms(metric: Metric, draw: Callable[[np.random.Generator], Any],
                        rng: np.random.Generator, n_triples: int = 1000,
                        tol: float = ATOL) -> dict:
    """Spot-check symmetry, triangle inequality and d(x, x) = 0 on random triples.

    Returns the worst violation of each axiom.
    """
    out = {"symmetry": 0.0, "triangle": 0.0, "identity": 0.0}
    for _ in range(n_triples):
        x, y, z = draw(rng), draw(rng), draw(rng)
        dxy, dyx = metric(x, y), metric(y, x)
        out["symmetry"] = max(out["symmetry"], abs(dxy - dyx))
        out["triangle"] = max(out["triangle"], metric(x, z) - dxy - metric(y, z))
        out["identity"] = max(out["identity"], abs(metric(x, x)))
    out["ok"] = all(v <= tol for k, v in out.items() if k != "ok")
    return out
