"""Exact discrete optimal transport and the entropic-Wasserstein barycenter.

Two barycenter solvers are provided:

* ``entropic_barycenter_solve`` runs mirror descent in the entropy geometry,
  using exact Kantorovich potentials as gradients of the transport term.  It
  works on 1-D and 2-D grids.
* ``barycenter_1d_exact`` exploits the quantile representation of 1-D
  transport.  The transport term only depends on the weighted average of the
  quantile functions, and the optimality conditions then fix the ratio of
  neighbouring weights, so the minimizer is found by a one-parameter search.
  It is much faster and is used by the Monte Carlo harness.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

# POT pulls in every installed deep-learning backend unless told otherwise
for _b in ("PYTORCH", "TENSORFLOW", "JAX", "CUPY"):
    os.environ.setdefault(f"POT_BACKEND_DISABLE_{_b}", "1")
import ot  # noqa: E402

MAX_SUPPORT = 2000
ENTROPY_FLOOR = 1e-12


# ---------------------------------------------------------------------------
# grids and densities


@dataclass(frozen=True)
class Grid:
    """Tensor grid of cell centres inside a bounded box.

    ``axes`` holds the strictly increasing node coordinates of each axis.
    """

    axes: tuple
    cell_volume: float
    nodes: np.ndarray = field(init=False, repr=False)
    cost: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        axes = tuple(np.asarray(a, float) for a in self.axes)
        if len(axes) not in (1, 2):
            raise ValueError("grid dimension must be 1 or 2")
        for a in axes:
            if a.ndim != 1 or a.size < 1 or np.any(np.diff(a) <= 0):
                raise ValueError("axis nodes must be strictly increasing")
        mesh = np.meshgrid(*axes, indexing="ij")
        nodes = np.stack([m.ravel() for m in mesh], axis=1)
        cost = ((nodes[:, None, :] - nodes[None, :, :]) ** 2).sum(-1)
        for arr in (nodes, cost):
            arr.setflags(write=False)
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "cost", cost)

    @classmethod
    def uniform(cls, size: int, dim: int = 1, lo: float = 0.0, hi: float = 1.0) -> "Grid":
        """``size`` cell centres per axis on [lo, hi]^dim."""
        h = (hi - lo) / size
        ax = lo + h * (np.arange(size) + 0.5)
        return cls(tuple(ax for _ in range(dim)), h**dim)

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    @property
    def diam(self) -> float:
        """Largest distance between two nodes."""
        return float(math.sqrt(sum((a[-1] - a[0]) ** 2 for a in self.axes)))

    @property
    def volume(self) -> float:
        return self.cell_volume * self.size


@dataclass(frozen=True)
class DiscreteDensity:
    """Probability vector on grid nodes (density value times cell volume)."""

    weights: np.ndarray
    grid: Grid

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).ravel()
        if w.size != self.grid.size:
            raise ValueError(f"{w.size} weights for a grid of {self.grid.size} nodes")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and nonnegative")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {w.sum():.15g}, not 1")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def normalized(cls, w, grid: Grid) -> "DiscreteDensity":
        w = np.asarray(w, float).ravel()
        w = w / w.sum()
        # one more pass absorbs the rounding of the first division
        return cls(w / w.sum(), grid)

    @classmethod
    def uniform(cls, grid: Grid) -> "DiscreteDensity":
        return cls.normalized(np.ones(grid.size), grid)

    @property
    def density(self) -> np.ndarray:
        return self.weights / self.grid.cell_volume

    def floored(self) -> "DiscreteDensity":
        """Copy with every weight at least 1e-12 * cell volume, renormalised."""
        w = np.maximum(self.weights, ENTROPY_FLOOR * self.grid.cell_volume)
        return DiscreteDensity.normalized(w, self.grid)


def l1_distance(a: DiscreteDensity, b: DiscreteDensity) -> float:
    """Total-variation style distance sum |a - b| between probability vectors."""
    return float(np.abs(a.weights - b.weights).sum())


# ---------------------------------------------------------------------------
# exact transport


@dataclass(frozen=True)
class TransportPlan:
    coupling: np.ndarray
    cost: float
    potentials: tuple  # (u, v), u[0] = 0
    dual_value: float

    @property
    def gap(self) -> float:
        return self.cost - self.dual_value


def w2_exact(a: DiscreteDensity, b: DiscreteDensity) -> TransportPlan:
    """Optimal coupling for squared Euclidean cost by network simplex.

    Dual potentials are shifted so that the first entry of ``u`` is 0; the
    dual objective is invariant under that shift.
    """
    if a.grid is not b.grid and not (a.grid.size == b.grid.size and np.array_equal(a.grid.nodes, b.grid.nodes)):
        raise ValueError("densities live on different grids")
    if a.grid.size > MAX_SUPPORT:
        raise ValueError(f"support {a.grid.size} exceeds {MAX_SUPPORT} nodes")
    if abs(a.weights.sum() - b.weights.sum()) > 1e-12:
        raise ValueError("infeasible marginals: total masses differ")
    M = a.grid.cost
    G, log = ot.emd(a.weights, b.weights, M, log=True, numItermax=10_000_000)
    if log.get("warning"):
        raise RuntimeError(f"network simplex did not converge: {log['warning']}")
    u, v = np.asarray(log["u"], float), np.asarray(log["v"], float)
    shift = u[0]
    u, v = u - shift, v + shift
    cost = float((G * M).sum())
    dual = float(a.weights @ u + b.weights @ v)
    return TransportPlan(G, cost, (u, v), dual)


def w2_squared_1d(a: DiscreteDensity, b: DiscreteDensity) -> float:
    """Independent 1-D oracle: integral of (F_a^-1 - F_b^-1)^2 over (0, 1).

    Both quantile functions are step functions; integrate exactly over the
    merged breakpoints.
    """
    if a.grid.dim != 1:
        raise ValueError("1-D grids only")
    x = a.grid.axes[0]
    Fa, Fb = np.cumsum(a.weights), np.cumsum(b.weights)
    knots = np.unique(np.concatenate([[0.0], np.minimum(Fa, 1.0), np.minimum(Fb, 1.0), [1.0]]))
    mid = 0.5 * (knots[1:] + knots[:-1])
    ia = np.minimum(np.searchsorted(Fa, mid), x.size - 1)
    ib = np.minimum(np.searchsorted(Fb, mid), x.size - 1)
    return float(np.sum(np.diff(knots) * (x[ia] - x[ib]) ** 2))


def negentropy(phi: DiscreteDensity) -> float:
    """Grid quadrature of the integral of f (log f - 1) + 1, f the density."""
    if np.any(phi.weights <= 0):
        raise ValueError("entropy undefined: density has a nonpositive node")
    f = phi.density
    return float(phi.grid.cell_volume * np.sum(f * (np.log(f) - 1.0) + 1.0))


def entropic_objective(phi: DiscreteDensity, measures: Sequence[DiscreteDensity],
                       weights: Optional[Sequence[float]] = None, lam: float = 0.1) -> float:
    """(1/2) sum_i w_i W2^2(phi, psi_i) + lam * negentropy(phi), with exact LPs."""
    w = _weights(weights, len(measures))
    reg = negentropy(phi) if lam > 0 else 0.0
    transport = sum(wi * w2_exact(phi, psi).cost for wi, psi in zip(w, measures))
    return 0.5 * transport + lam * reg


def _weights(weights, k):
    if weights is None:
        return np.full(k, 1.0 / k)
    w = np.asarray(weights, float)
    if w.size != k or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
        raise ValueError("weights must be a probability vector matching the measures")
    return w


# ---------------------------------------------------------------------------
# mirror descent


@dataclass(frozen=True)
class SolverResult:
    density: DiscreteDensity
    objective: float
    iterations: int
    converged: bool


class NonConvergence(RuntimeError):
    def __init__(self, msg, best):
        super().__init__(msg)
        self.best = best


def entropic_barycenter_solve(measures: Sequence[DiscreteDensity], weights, lam: float,
                              grid: Grid, tol: float = 1e-10, step0: Optional[float] = None,
                              max_iter: int = 100_000, init: Optional[DiscreteDensity] = None) -> SolverResult:
    """Mirror descent on the simplex for the entropic barycenter objective.

    The gradient of (1/2) W2^2(phi, psi_i) in phi is half the Kantorovich
    potential u_i (defined up to a constant, which the renormalisation
    removes); the entropy contributes lam * log f.  The update is

        phi <- phi * exp(-eta * (sum_i w_i u_i / 2 + lam log f)),  renormalised,

    with eta = 1/(lam + step0), halved whenever the objective increases (the
    rejected step is discarded).  Iteration stops once the objective has
    decreased by less than ``tol`` over the last 10 accepted iterations.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    w = _weights(weights, len(measures))
    if step0 is None:
        step0 = grid.diam**2
    eta = 1.0 / (lam + step0)
    phi = (init or DiscreteDensity.uniform(grid)).floored()

    def evaluate(p):
        plans = [w2_exact(p, psi) for psi in measures]
        val = 0.5 * sum(wi * pl.cost for wi, pl in zip(w, plans)) + lam * negentropy(p)
        grad = 0.5 * sum(wi * pl.potentials[0] for wi, pl in zip(w, plans))
        return val, grad

    val, grad = evaluate(phi)
    history = [val]
    for it in range(1, max_iter + 1):
        g = grad + lam * np.log(phi.density)
        logw = np.log(phi.weights) - eta * (g - g.min())
        cand = DiscreteDensity.normalized(np.exp(logw - logw.max()), grid).floored()
        cval, cgrad = evaluate(cand)
        if cval > val:
            eta *= 0.5
            if eta < 1e-30:
                return SolverResult(phi, val, it, True)
            continue
        phi, val, grad = cand, cval, cgrad
        history.append(val)
        if len(history) > 10 and history[-11] - history[-1] < tol:
            return SolverResult(phi, val, it, True)
    raise NonConvergence(f"no convergence in {max_iter} iterations", SolverResult(phi, val, max_iter, False))


# ---------------------------------------------------------------------------
# exact 1-D solver via averaged quantile functions


class QuantileProfile:
    """Nondecreasing function Qbar on (0, 1) with its integral G(u)."""

    x: np.ndarray

    def right(self, u):  # Qbar(u+)
        raise NotImplementedError

    def left(self, u):  # Qbar(u-)
        raise NotImplementedError

    def integral(self, u):  # int_0^u Qbar
        raise NotImplementedError

    second_moment: float  # sum_i w_i int F_i^-1(u)^2 du


class StepProfile(QuantileProfile):
    """Weighted average of the step quantile functions of discrete measures.

    F_i^-1 starts at x_0 and jumps by (x_{j+1} - x_j) where the cdf passes
    F_i[j]; the average is x_0 plus the cumulated weighted jumps.
    """

    def __init__(self, measures: np.ndarray, weights: np.ndarray, x: np.ndarray):
        P = np.atleast_2d(np.asarray(measures, float))
        w = np.asarray(weights, float)
        self.x = np.asarray(x, float)
        F = np.cumsum(P, axis=1)[:, :-1]
        dx = np.diff(self.x)
        pos = F.ravel()
        inc = (w[:, None] * dx[None, :]).ravel()
        order = np.argsort(pos, kind="stable")
        self.pos = pos[order]
        self.val = self.x[0] + np.concatenate([[0.0], np.cumsum(inc[order])])
        # integral at each jump position
        seg = np.diff(np.concatenate([[0.0], self.pos]))
        self.G = np.concatenate([[0.0], np.cumsum(seg * self.val[:-1])])
        self.second_moment = float(np.sum(w[:, None] * P * self.x[None, :] ** 2))

    def right(self, u):
        return self.val[np.searchsorted(self.pos, u, side="right")]

    def left(self, u):
        return self.val[np.searchsorted(self.pos, u, side="left")]

    def integral(self, u):
        u = np.asarray(u, float)
        k = np.searchsorted(self.pos, u, side="right")
        base = np.concatenate([[0.0], self.pos])[k]
        return self.G[k] + (u - base) * self.val[k]


def _spline_cdf(u, c1, c2, c3):
    """P(w1 c1 + w2 c2 + w3 c3 <= u) for w uniform on the simplex, c1 <= c2 <= c3."""
    u = np.asarray(u, float)
    out = np.where(u >= c3, 1.0, 0.0)
    span = c3 - c1
    if span <= 0:
        return out
    a = (u > c1) & (u <= c2)
    b = (u > c2) & (u < c3)
    if c2 > c1:
        out = np.where(a, (u - c1) ** 2 / (span * (c2 - c1)), out)
    if c3 > c2:
        out = np.where(b, 1.0 - (c3 - u) ** 2 / (span * (c3 - c2)), out)
    return out


def _spline_cdf_integral(u, c1, c2, c3):
    """Integral from 0 to u of _spline_cdf."""
    u = np.asarray(u, float)
    span = c3 - c1
    out = np.maximum(u - c3, 0.0)
    if span <= 0:
        return out
    if c2 > c1:
        t = np.clip(u, c1, c2) - c1
        out = out + t**3 / (3.0 * span * (c2 - c1))
    if c3 > c2:
        t = np.clip(u, c2, c3)
        out = out + (t - c2) - ((c3 - c2) ** 3 - (c3 - t) ** 3) / (3.0 * span * (c3 - c2))
    return out


class DirichletMixtureProfile(QuantileProfile):
    """Population average quantile of psi = sum_m w_m B_m, w ~ Dirichlet(1, 1, 1).

    The cdf of psi at node k is the linear form sum_m w_m cdf_m[k] of a point
    uniform on the simplex, whose law is a linear B-spline with knots at the
    sorted cdf_m[k].  Then E[F^-1(u)] = x_0 + sum_k dx_k P(F[k] < u).
    """

    def __init__(self, bumps: np.ndarray, x: np.ndarray):
        B = np.asarray(bumps, float)
        if B.shape[0] != 3:
            raise ValueError("closed form requires exactly three mixture components")
        self.x = np.asarray(x, float)
        self.dx = np.diff(self.x)
        C = np.sort(np.cumsum(B, axis=1)[:, :-1], axis=0)
        self.knots = [tuple(C[:, k]) for k in range(C.shape[1])]
        self.second_moment = float(np.mean(B, axis=0) @ self.x**2)

    def right(self, u):
        u = np.asarray(u, float)
        return self.x[0] + sum(d * _spline_cdf(u, *c) for d, c in zip(self.dx, self.knots))

    left = right  # continuous except on a null set

    def integral(self, u):
        u = np.asarray(u, float)
        return self.x[0] * u + sum(d * _spline_cdf_integral(u, *c) for d, c in zip(self.dx, self.knots))


def quantile_objective(a: np.ndarray, prof: QuantileProfile, lam: float, cell_volume: float) -> float:
    """Exact entropic objective of weights ``a`` on the 1-D nodes of ``prof``.

    (1/2) sum_i w_i W2^2(a, psi_i) expands as
    (1/2) sum_j a_j x_j^2 - sum_j x_j (G(C_j) - G(C_{j-1})) + (1/2) second moment,
    with C the cdf of a and G the integral of the averaged quantile.
    """
    x = prof.x
    C = np.minimum(np.cumsum(a), 1.0)
    G = prof.integral(np.concatenate([[0.0], C]))
    transport = 0.5 * np.sum(a * x * x) - np.sum(x * np.diff(G)) + 0.5 * prof.second_moment
    if lam == 0:
        return float(transport)
    if np.any(a <= 0):
        raise ValueError("entropy undefined: density has a nonpositive node")
    f = a / cell_volume
    return float(transport + lam * cell_volume * np.sum(f * (np.log(f) - 1.0) + 1.0))


def _shoot(log_a0, prof: QuantileProfile, lam: float, overrides: Optional[dict] = None):
    """Propagate a_{k+1} = a_k exp(dx_k (Qbar(C_k) - midpoint_k) / lam) from a_0.

    Vectorised over candidate starting values.  ``overrides`` maps a step k
    to a forced value of Qbar there (a subgradient choice inside a jump);
    an array value gives one forced value per candidate.
    Returns the weights and the Qbar values used at each step.
    """
    x = prof.x
    dx, mids = np.diff(x), 0.5 * (x[1:] + x[:-1])
    overrides = overrides or {}
    la = np.atleast_1d(np.asarray(log_a0, float)).copy()
    a = np.exp(la)
    out = np.empty((la.size, x.size))
    out[:, 0] = a
    C = a.copy()
    qsel = np.empty((la.size, x.size - 1))
    for k in range(x.size - 1):
        if k in overrides:
            q = np.broadcast_to(np.asarray(overrides[k], float), C.shape).copy()
        else:
            q = prof.right(np.minimum(C, 1.0))
        qsel[:, k] = q
        la = la + dx[k] * (q - mids[k]) / lam
        a = np.exp(la)
        out[:, k + 1] = a
        C = C + a
    return out, qsel


def _bisect_floats(lo: float, hi: float, below) -> tuple:
    """Shrink [lo, hi] to adjacent floats keeping below(lo) and not below(hi)."""
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if below(mid):
            lo = mid
        else:
            hi = mid
    return lo, hi


def _multisect(lo: float, hi: float, total, width: int = 64, rounds: int = 12) -> tuple:
    """Vectorised search for the crossing of total(.) = 1 on an increasing map.

    ``total`` maps an array of candidates to their masses.  Each round keeps
    the grid cell holding the crossing; a final scalar bisection reaches
    adjacent floats.
    """
    for _ in range(rounds):
        if not hi - lo > 4.0 * np.spacing(max(abs(lo), abs(hi))):
            break
        grid = np.linspace(lo, hi, width)
        k = int(np.searchsorted(total(grid), 1.0))
        if k == 0:
            hi = grid[0]
            break
        if k == width:
            lo = grid[-1]
            break
        lo, hi = grid[k - 1], grid[k]
    return _bisect_floats(lo, hi, lambda t: total(np.array([t]))[0] < 1.0)


def barycenter_1d_exact(prof: QuantileProfile, lam: float, cell_volume: float,
                        rounds: int = 10, width: int = 64) -> np.ndarray:
    """Entropic barycenter weights on 1-D nodes from the averaged quantile profile.

    The transport term equals sum_k dx_k (G(C_k) - m_k C_k) up to a constant,
    with C the cdf of the weights, G the integral of Qbar and m_k the node
    midpoints.  The first-order conditions then read

        log(a_{k+1} / a_k) = dx_k (q_k - m_k) / lam,   q_k in [Qbar(C_k-), Qbar(C_k+)],

    so the weights are fixed by a_0 and by the choices q_k at steps where
    C_k sits on a jump of Qbar.  Total mass increases with a_0 and with each
    q_k.  A vectorised multi-section on log a_0 is run first; whenever the
    total mass jumps across 1 between adjacent floats, the offending step is
    pinned on its jump and q_k becomes the search variable, recursively.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    total = lambda la, ov: _shoot(la, prof, lam, ov)[0].sum(axis=1)
    lo, hi = -80.0, 0.0
    for _ in range(rounds):
        grid = np.linspace(lo, hi, width)
        tot = total(grid, None)
        k = int(np.searchsorted(tot, 1.0))  # first candidate with mass >= 1
        if k == 0:
            lo, hi = grid[0] - 10.0, grid[0]
        elif k == width:
            lo, hi = grid[-1], min(0.0, grid[-1] + 10.0)
        else:
            lo, hi = grid[k - 1], grid[k]
            if hi - lo < 1e-13:
                break
    lo, hi = _multisect(lo, hi, lambda t: total(t, None))
    la0, overrides, last = hi, {}, -1
    A_lo, q_lo = _shoot(lo, prof, lam)
    A_hi, q_hi = _shoot(hi, prof, lam)
    for _ in range(prof.x.size):
        s_lo, s_hi = A_lo.sum(), A_hi.sum()
        if s_hi - s_lo < 1e-12:
            a = A_hi[0] if abs(s_hi - 1.0) <= abs(s_lo - 1.0) else A_lo[0]
            return a / a.sum()
        # first step after the current search variable where the paths split
        split = np.flatnonzero(q_lo[0, last + 1:] != q_hi[0, last + 1:])
        k = last + 1 + int(split[0])
        vlo, vhi = _multisect(float(q_lo[0, k]), float(q_hi[0, k]),
                              lambda v: total(np.full(v.shape, la0), {**overrides, k: v}))
        A_lo, q_lo = _shoot(la0, prof, lam, {**overrides, k: vlo})
        A_hi, q_hi = _shoot(la0, prof, lam, {**overrides, k: vhi})
        overrides[k] = vhi
        last = k
    raise RuntimeError("exact 1-D solver failed to resolve jump structure")


# ---------------------------------------------------------------------------
# sampling random measures


def gaussian_bumps(grid: Grid, centers: Sequence[float], width: float) -> np.ndarray:
    """Discretised Gaussian bumps truncated to the grid, one probability vector per row."""
    x = grid.nodes
    rows = []
    for c in centers:
        c = np.broadcast_to(np.asarray(c, float), (grid.dim,))
        b = np.exp(-((x - c) ** 2).sum(1) / (2.0 * width**2))
        rows.append(b / b.sum())
    return np.array(rows)


def dirichlet_mixtures(rng: np.random.Generator, bumps: np.ndarray, n: int,
                       concentration: float = 1.0) -> np.ndarray:
    """n random measures sum_m w_m B_m with w ~ Dirichlet(concentration)."""
    W = rng.dirichlet(np.full(bumps.shape[0], concentration), size=n)
    P = W @ bumps
    return P / P.sum(axis=1, keepdims=True)


def verify_entropic_quadruple(grid: Grid, n_quadruples: int, rng: np.random.Generator,
                              a_const: Optional[float] = None) -> float:
    """Max of the quadruple difference of (1/2) W2^2 minus 4 diam^2 ||phi0 - phi1||_1.

    phi0, phi1, psi0, psi1 are drawn from a flat Dirichlet on the grid and
    all four transport costs are exact LPs.
    """
    if a_const is None:
        a_const = 4.0 * grid.diam**2
    worst = -math.inf
    for _ in range(n_quadruples):
        p0, p1, s0, s1 = (DiscreteDensity.normalized(rng.dirichlet(np.ones(grid.size)), grid) for _ in range(4))
        lhs = 0.5 * (w2_exact(p0, s0).cost - w2_exact(p1, s0).cost + w2_exact(p1, s1).cost - w2_exact(p0, s1).cost)
        worst = max(worst, lhs - a_const * l1_distance(p0, p1))
    return float(worst)
