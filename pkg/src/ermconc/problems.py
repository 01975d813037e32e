"""Concrete estimation problems and executable checks of their assumptions.

Each problem bundles a sampler, the empirical minimizer, the true minimizer
set, the metric and the assumption constants.  Problems also expose
vectorised loss / pseudometric / distance functions so that the quadruple and
variance inequalities can be swept over many random points.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import orlicz, transport
from .bounds import ConcentrationParams
from .core import ATOL, EstimationProblem, PointSet, SampleBatch, euclidean
from .hoffman import build_lasso_certificate, hoffman_constant, lasso_rate_constants, lasso_tau_lower_bound

E = math.e


# ---------------------------------------------------------------------------
# solvers


def frechet_mean_euclidean(batch) -> np.ndarray:
    """Arithmetic mean of the samples (the empirical barycenter in R^d)."""
    X = np.asarray(getattr(batch, "samples", batch), float)
    if X.shape[0] == 0:
        raise ValueError("empty batch")
    return X.mean(axis=0)


def tree_distance(p, q) -> float:
    """Spider metric on points (leg, t): |t - s| on a common leg, t + s across legs."""
    lp, tp = int(p[0]), float(p[1])
    lq, tq = int(q[0]), float(q[1])
    if lp == lq or tp == 0.0 or tq == 0.0:
        return abs(tp - tq)
    return tp + tq


def _tree_distance_v(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    same = (p[..., 0] == q[..., 0]) | (p[..., 1] == 0) | (q[..., 1] == 0)
    return np.where(same, np.abs(p[..., 1] - q[..., 1]), p[..., 1] + q[..., 1])


def frechet_mean_spider(batch, k: int) -> np.ndarray:
    """Empirical Frechet mean on a spider with ``k`` legs.

    Placing the candidate at distance t on leg l costs
    n t^2 - 2 t (S_l - S_off) + sum x_i^2, where S_l sums the distances of
    the samples on leg l and S_off those elsewhere.  The best t on leg l is
    max(0, (S_l - S_off)/n); the best leg has the largest such t.  Ties
    between legs at t > 0 return the origin.
    """
    X = np.asarray(getattr(batch, "samples", batch), float)
    if X.shape[0] == 0:
        raise ValueError("empty batch")
    legs = X[:, 0]
    if np.any(legs < 0) or np.any(legs >= k) or np.any(legs != np.round(legs)) or np.any(X[:, 1] < 0):
        raise ValueError("sample off the tree")
    n = X.shape[0]
    total = X[:, 1].sum()
    S = np.bincount(legs.astype(int), weights=X[:, 1], minlength=k)
    t = np.maximum(0.0, (2.0 * S - total) / n)
    best = t.max()
    if best <= 0.0 or np.count_nonzero(t == best) > 1:
        return np.array([0.0, 0.0])
    return np.array([float(np.argmax(t)), best])


def top_eigenvector_empirical(batch) -> np.ndarray:
    """Unit top eigenvector of the centred empirical covariance (1/n), sign canonical."""
    Y = np.asarray(getattr(batch, "samples", batch), float)
    if Y.ndim == 3:  # (n, 2, d) pairs: the covariance uses the first coordinate block
        Y = Y[:, 0, :]
    if Y.shape[0] < 2:
        raise ValueError("need n >= 2")
    Yc = Y - Y.mean(axis=0)
    cov = Yc.T @ Yc / Y.shape[0]
    return top_eigenvector(cov)


def top_eigenvector(cov: np.ndarray) -> np.ndarray:
    cov = np.asarray(cov, float)
    if not np.any(cov):
        raise ValueError("degenerate covariance")
    w, V = np.linalg.eigh(cov)
    return canonical_sign(V[:, -1])


def canonical_sign(v: np.ndarray) -> np.ndarray:
    """Flip v so that its first nonzero coordinate is positive."""
    v = np.asarray(v, float)
    nz = np.flatnonzero(v)
    if nz.size and v[nz[0]] < 0:
        return -v
    return v


def sphere_distance(phi, psi, tol: float = 1e-8) -> float:
    """Great-circle distance arccos<phi, psi>, inputs renormalised if nearly unit."""
    phi, psi = np.asarray(phi, float), np.asarray(psi, float)
    for v in (phi, psi):
        if abs(np.linalg.norm(v) - 1.0) > tol:
            raise ValueError("not a unit vector")
    phi, psi = phi / np.linalg.norm(phi), psi / np.linalg.norm(psi)
    return float(np.arccos(np.clip(phi @ psi, -1.0, 1.0)))


class LassoNonConvergence(RuntimeError):
    def __init__(self, msg, last):
        super().__init__(msg)
        self.last = last


def soft_threshold(z: np.ndarray, t: float) -> np.ndarray:
    return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)


def lasso_quadratic_solve(G: np.ndarray, b: np.ndarray, c: float, lam: float, tol: float = 1e-12,
                          max_iter: int = 1_000_000, window: int = 50) -> np.ndarray:
    """Minimise (1/2) phi'G phi - b'phi + c + lam ||phi||_1 by proximal gradient.

    Step 1/L with L the largest eigenvalue of G, started at zero.  With this
    step every iterate decreases the objective, which is asserted.  Stops
    when the decrease over ``window`` iterations falls below
    tol/10 * max(1, |F|).
    """
    G, b = np.asarray(G, float), np.asarray(b, float)
    L = float(np.linalg.eigvalsh(G)[-1])
    if L <= 0:
        return np.zeros_like(b)
    step = 1.0 / L
    F = lambda p: 0.5 * p @ G @ p - b @ p + c + lam * np.abs(p).sum()
    phi = np.zeros_like(b)
    hist = [F(phi)]
    for it in range(1, max_iter + 1):
        phi = soft_threshold(phi - step * (G @ phi - b), step * lam)
        f = F(phi)
        scale = max(1.0, abs(f))
        if f > hist[-1] + 1e-13 * scale:
            raise AssertionError(f"objective increased at iteration {it}: {hist[-1]!r} -> {f!r}")
        hist.append(f)
        if it >= window and hist[-1 - window] - f < tol / 10.0 * scale:
            return phi
    raise LassoNonConvergence(f"no convergence in {max_iter} iterations", phi)


def lasso_solve(batch, lam: float, tol: float = 1e-12) -> np.ndarray:
    """LASSO estimate for samples (theta(y), v) stored as rows [theta..., v].

    Minimises (1/2n) ||V - Theta phi||^2 + lam ||phi||_1.
    """
    X = np.asarray(getattr(batch, "samples", batch), float)
    n = X.shape[0]
    if n < 1:
        raise ValueError("need n >= 1")
    if lam <= 0:
        raise ValueError("lambda must be positive")
    Th, V = X[:, :-1], X[:, -1]
    return lasso_quadratic_solve(Th.T @ Th / n, Th.T @ V / n, 0.5 * V @ V / n, lam, tol)


def davis_kahan_bound(cov_true: np.ndarray, cov_emp: np.ndarray) -> float:
    """2 sqrt2 ||cov_emp - cov_true||_2 / (lambda_1 - lambda_2)."""
    w = np.linalg.eigvalsh(np.asarray(cov_true, float))
    gap = w[-1] - w[-2]
    if gap <= 0:
        raise ValueError("zero eigengap")
    return float(2.0 * math.sqrt(2.0) * np.linalg.norm(np.asarray(cov_emp) - cov_true, 2) / gap)


# ---------------------------------------------------------------------------
# generic verifiers


def verify_quadruple_inequality(problem, n_quadruples: int, rng: np.random.Generator,
                                a_scale: float = 1.0, chunk: int = 20_000) -> float:
    """Max over random (phi, psi, x, y) of
    l(phi,x) - l(psi,x) - l(phi,y) + l(psi,y) - a(x,y) theta(phi,psi)^alpha.

    ``a_scale`` multiplies a; values below 1 inject a fault.
    """
    worst = -math.inf
    done = 0
    while done < n_quadruples:
        m = min(chunk, n_quadruples - done)
        phi, psi, x, y = problem.draw_quadruples(rng, m)
        lhs = problem.loss_v(phi, x) - problem.loss_v(psi, x) - problem.loss_v(phi, y) + problem.loss_v(psi, y)
        rhs = a_scale * problem.a_v(x, y) * problem.theta_v(phi, psi) ** problem.alpha
        worst = max(worst, float(np.max(lhs - rhs)))
        done += m
    return worst


def verify_variance_inequality(problem, n_points: int, rng: np.random.Generator) -> float:
    """Max over sampled phi in the level set of tau theta(phi, S)^beta - (J(phi) - J*)."""
    phi = problem.draw_level_set(rng, n_points)
    gap = problem.population_J(phi) - problem.J_star
    p = problem.params()
    return float(np.max(p.tau * problem.set_theta_v(phi) ** p.beta - gap))


def verify_eigengap_lemma(A: np.ndarray, n_vectors: int, rng: np.random.Generator) -> float:
    """Max over random v orthogonal to u1 of (l1 - l2)||v||^2 - (||v||^2 l1 - v'Av)."""
    A = np.asarray(A, float)
    w, U = np.linalg.eigh(A)
    u1 = U[:, -1]
    l1, l2 = w[-1], w[-2]
    V = rng.standard_normal((n_vectors, A.shape[0]))
    V -= np.outer(V @ u1, u1)
    nv = np.einsum("ij,ij->i", V, V)
    quad = np.einsum("ij,jk,ik->i", V, A, V)
    return float(np.max((l1 - l2) * nv - (nv * l1 - quad)))


# ---------------------------------------------------------------------------
# problems


class _HadamardMixin:
    alpha = 1.0

    def loss_v(self, phi, x):
        d = self.rho_v(phi, x)
        return d * d

    def a_v(self, x, y):
        return 2.0 * self.rho_v(x, y)

    def theta_v(self, phi, psi):
        return self.rho_v(phi, psi)

    def params(self) -> ConcentrationParams:
        return ConcentrationParams(beta=2.0, alpha=1.0, tau=1.0, j0=math.inf,
                                   psi1_a=2.0 * self.rho_psi1, diam_s=0.0)


@dataclass(frozen=True)
class EuclideanBarycenterProblem(_HadamardMixin, EstimationProblem):
    """Mean of a Gaussian in R^d with covariance ``cov``."""

    cov: tuple = ((1.0, 0.0), (0.0, 0.25))
    mean: tuple = (0.0, 0.0)
    name: str = "euclidean"

    @property
    def d(self) -> int:
        return len(self.mean)

    @functools.cached_property
    def _chol(self):
        return np.linalg.cholesky(np.asarray(self.cov, float))

    def sample(self, rng, n):
        return np.asarray(self.mean) + rng.standard_normal((n, self.d)) @ self._chol.T

    def solve_empirical(self, batch):
        return PointSet.of(frechet_mean_euclidean(batch))

    def true_minimizers(self):
        return PointSet.of(np.asarray(self.mean, float))

    def distance(self, p, q):
        return euclidean(p, q)

    def rho_v(self, p, q):
        return np.sqrt(((np.asarray(p) - np.asarray(q)) ** 2).sum(-1))

    @property
    def trace(self) -> float:
        return float(np.trace(np.asarray(self.cov, float)))

    @functools.cached_property
    def rho_psi1(self) -> float:
        """psi_1 norm of ||X - X'|| (X - X' ~ N(0, 2 cov))."""
        C = 2.0 * np.asarray(self.cov, float)
        if self.d == 2 and C[0, 1] == 0:
            return orlicz.psi1_gaussian_norm_2d(np.diag(C)).value
        rng = np.random.default_rng(20240601)
        Z = rng.standard_normal((1_000_000, self.d)) @ np.linalg.cholesky(C).T
        return orlicz.psi_norm_empirical(np.linalg.norm(Z, axis=1), 1.0).value

    def draw_quadruples(self, rng, m):
        return tuple(self.sample(rng, m) for _ in range(4))

    @property
    def J_star(self) -> float:
        return self.trace

    def population_J(self, phi):
        return ((np.asarray(phi) - np.asarray(self.mean)) ** 2).sum(-1) + self.trace

    def set_theta_v(self, phi):
        return self.rho_v(phi, np.asarray(self.mean))

    def draw_level_set(self, rng, m):
        return np.asarray(self.mean) + 3.0 * rng.standard_normal((m, self.d))


@dataclass(frozen=True)
class SpiderTreeBarycenterProblem(_HadamardMixin, EstimationProblem):
    """Frechet mean on a spider (star-shaped metric tree) with equal legs.

    A sample picks leg k with probability ``leg_probs[k]`` and a distance
    Uniform[0, leg_length] from the centre.  Points are stored as (leg, t).
    """

    leg_probs: tuple = (0.7, 0.15, 0.15)
    leg_length: float = 1.0
    name: str = "spider"

    @property
    def k(self) -> int:
        return len(self.leg_probs)

    def sample(self, rng, n):
        legs = rng.choice(self.k, size=n, p=np.asarray(self.leg_probs))
        t = rng.uniform(0.0, self.leg_length, size=n)
        return np.stack([legs.astype(float), t], axis=1)

    def solve_empirical(self, batch):
        return PointSet.of(frechet_mean_spider(batch, self.k))

    @functools.cached_property
    def _true(self) -> np.ndarray:
        p = np.asarray(self.leg_probs, float)
        t = np.maximum(0.0, (2.0 * p - 1.0) * self.leg_length / 2.0)
        if t.max() <= 0 or np.count_nonzero(t == t.max()) > 1:
            return np.array([0.0, 0.0])
        return np.array([float(np.argmax(t)), float(t.max())])

    def true_minimizers(self):
        return PointSet.of(self._true)

    def distance(self, p, q):
        return tree_distance(p, q)

    def rho_v(self, p, q):
        return _tree_distance_v(np.asarray(p, float), np.asarray(q, float))

    @functools.cached_property
    def rho_psi1(self) -> float:
        return orlicz.psi1_spider_distance(self.leg_probs, self.leg_length).value

    def draw_quadruples(self, rng, m):
        return tuple(self.sample(rng, m) for _ in range(4))

    def population_J(self, phi):
        """E rho(phi, X)^2 = t^2 - t (2 p_l - 1) L + L^2/3 for phi = (l, t)."""
        phi = np.atleast_2d(phi)
        p = np.asarray(self.leg_probs)[phi[:, 0].astype(int)]
        t, L = phi[:, 1], self.leg_length
        return t * t - t * (2.0 * p - 1.0) * L + L * L / 3.0

    @property
    def J_star(self) -> float:
        return float(self.population_J(self._true[None, :])[0])

    def set_theta_v(self, phi):
        return self.rho_v(np.atleast_2d(phi), self._true[None, :])

    def draw_level_set(self, rng, m):
        legs = rng.integers(0, self.k, size=m)
        t = rng.uniform(0.0, 2.0 * self.leg_length, size=m)
        return np.stack([legs.astype(float), t], axis=1)


@dataclass(frozen=True)
class EigenvectorProblem(EstimationProblem):
    """Leading eigenvector of a Gaussian covariance on the sphere S^(d-1).

    Data points are pairs x = (y, z) of independent draws, matching the
    product-measure form of the cost; the empirical solver uses the y block.
    """

    eigenvalues: tuple = (2.0, 1.0, 0.75, 0.5, 0.25)
    name: str = "eigenvector"
    alpha = 1.0

    @property
    def d(self) -> int:
        return len(self.eigenvalues)

    @property
    def cov(self) -> np.ndarray:
        return np.diag(np.asarray(self.eigenvalues, float))

    @property
    def gap(self) -> float:
        w = np.sort(np.asarray(self.eigenvalues, float))
        return float(w[-1] - w[-2])

    @property
    def u1(self) -> np.ndarray:
        return top_eigenvector(self.cov)

    def sample(self, rng, n):
        return rng.standard_normal((n, self.d)) * np.sqrt(np.asarray(self.eigenvalues))

    def solve_empirical(self, batch):
        v = top_eigenvector_empirical(batch)
        return PointSet.of(v, -v)

    def true_minimizers(self):
        u = self.u1
        return PointSet.of(u, -u)

    def distance(self, p, q):
        return sphere_distance(p, q)

    @property
    def psi2_y(self) -> float:
        return orlicz.psi2_gaussian_vector(self.cov).value

    @property
    def c_rate(self) -> float:
        g, d, s = self.gap, self.d, self.psi2_y
        return g * g / (32.0 * E**2 * d**2 * s**4 + 8.0 * E * d * s**2 * g)

    def kappa(self, n: float) -> float:
        return self.d * math.exp(-self.c_rate * n)

    def params(self) -> ConcentrationParams:
        return ConcentrationParams(beta=2.0, alpha=1.0, tau=4.0 / math.pi**2 * self.gap, j0=math.inf,
                                   psi1_a=8.0 * self.d * self.psi2_y**2, diam_s=math.pi,
                                   kappa=self.kappa)

    # vectorised pieces; x has shape (m, 2, d) holding (y, z)
    def loss_v(self, phi, x):
        yp = np.einsum("ij,ij->i", x[:, 0], phi)
        zp = np.einsum("ij,ij->i", x[:, 1], phi)
        return yp * yp - yp * zp

    def a_v(self, x, xp):
        ny, nz = np.linalg.norm(x[:, 0], axis=1), np.linalg.norm(x[:, 1], axis=1)
        nyp, nzp = np.linalg.norm(xp[:, 0], axis=1), np.linalg.norm(xp[:, 1], axis=1)
        differ = np.any(x != xp, axis=(1, 2))
        return 2.0 * (ny**2 + nyp**2 + ny * nz + nyp * nzp) * differ

    def theta_v(self, phi, psi):
        return np.arccos(np.clip(np.einsum("ij,ij->i", phi, psi), -1.0, 1.0))

    def _unit(self, rng, m):
        v = rng.standard_normal((m, self.d))
        return v / np.linalg.norm(v, axis=1, keepdims=True)

    def draw_quadruples(self, rng, m):
        pair = lambda: np.stack([self.sample(rng, m), self.sample(rng, m)], axis=1)
        return self._unit(rng, m), self._unit(rng, m), pair(), pair()

    @property
    def J_star(self) -> float:
        return -float(np.max(self.eigenvalues))

    def population_J(self, phi):
        return -np.einsum("ij,jk,ik->i", phi, self.cov, phi)

    def set_theta_v(self, phi):
        return np.arccos(np.clip(np.abs(phi @ self.u1), 0.0, 1.0))

    def draw_level_set(self, rng, m):
        return self._unit(rng, m)


@dataclass(frozen=True)
class LassoProblem(EstimationProblem):
    """Sparse linear regression V = <phi0, theta(Y)> + eps with Gaussian features.

    theta(Y) = Y ~ N(0, cov_theta), eps ~ N(0, noise_sd^2).  Samples are rows
    [theta..., v].
    """

    cov_theta: tuple = ((1.0, 0.3, 0.0), (0.3, 1.0, 0.2), (0.0, 0.2, 1.0))
    phi0: tuple = (1.0, -0.5, 0.0)
    noise_sd: float = 0.5
    lam: float = 0.1
    tol: float = 1e-12
    name: str = "lasso"
    alpha = 1.0

    @property
    def m(self) -> int:
        return len(self.phi0)

    @functools.cached_property
    def _C(self) -> np.ndarray:
        return np.asarray(self.cov_theta, float)

    @functools.cached_property
    def _chol(self):
        return np.linalg.cholesky(self._C)

    @property
    def ev2(self) -> float:
        p = np.asarray(self.phi0)
        return float(p @ self._C @ p + self.noise_sd**2)

    @property
    def R(self) -> float:
        return self.ev2 / self.lam

    def sample(self, rng, n):
        Th = rng.standard_normal((n, self.m)) @ self._chol.T
        v = Th @ np.asarray(self.phi0) + self.noise_sd * rng.standard_normal(n)
        return np.column_stack([Th, v])

    def solve_empirical(self, batch):
        return PointSet.of(lasso_solve(batch, self.lam, self.tol))

    @functools.cached_property
    def phi_star(self) -> np.ndarray:
        b = self._C @ np.asarray(self.phi0)
        return lasso_quadratic_solve(self._C, b, 0.5 * self.ev2, self.lam, tol=1e-14)

    def true_minimizers(self):
        return PointSet.of(self.phi_star)

    def distance(self, p, q):
        return euclidean(p, q)

    @functools.cached_property
    def sqrt_cov(self) -> np.ndarray:
        w, U = np.linalg.eigh(self._C)
        return (U * np.sqrt(w)) @ U.T

    @functools.cached_property
    def hoffman(self):
        if self.m > 4:
            return None
        return hoffman_constant(build_lasso_certificate(self.sqrt_cov, self.lam).matrix)

    @property
    def psi2_theta(self) -> float:
        return orlicz.psi2_gaussian_vector(self._C).value

    @property
    def psi2_v(self) -> float:
        return orlicz.psi2_gaussian(math.sqrt(self.ev2)).value

    @functools.cached_property
    def tau(self) -> float:
        if self.hoffman is None:
            return estimate_lojasiewicz_lasso(self, np.random.default_rng(7))
        return lasso_tau_lower_bound(self.hoffman.h, self.lam, self.R,
                                     float(np.linalg.norm(self.sqrt_cov, 2)), self.ev2)

    @property
    def tau_estimated(self) -> bool:
        return self.hoffman is None

    @functools.cached_property
    def rates(self):
        H = self.hoffman.h if self.hoffman is not None else 1.0 / math.sqrt(self.tau)
        return lasso_rate_constants(self.psi2_theta, self.psi2_v, math.sqrt(self.ev2), self.m,
                                    H, float(np.linalg.norm(self._C, 2)))

    @property
    def psi1_a(self) -> float:
        s, m = self.psi2_theta, self.m
        return 4.0 * self.R * m * s * s + 4.0 * math.sqrt(m) * s * self.psi2_v

    def params(self) -> ConcentrationParams:
        r = self.rates
        return ConcentrationParams(beta=2.0, alpha=1.0, tau=self.tau, j0=self.ev2 / self.lam,
                                   psi1_a=self.psi1_a, diam_s=0.0, eta=r.eta, kappa=r.kappa, iota=r.eta)

    # l(phi, (y, v)) = (<phi, theta(y)> - v)^2 on the ball ||phi||_2 <= R
    def loss_v(self, phi, x):
        r = np.einsum("ij,ij->i", phi, x[:, :-1]) - x[:, -1]
        return r * r

    def a_v(self, x, xp):
        def part(z):
            nt = np.linalg.norm(z[:, :-1], axis=1)
            return nt * (2.0 * self.R * nt + 2.0 * np.abs(z[:, -1]))
        return (part(x) + part(xp)) * np.any(x != xp, axis=1)

    def theta_v(self, phi, psi):
        return np.linalg.norm(phi - psi, axis=1)

    def _ball(self, rng, m, radius):
        v = rng.standard_normal((m, self.m))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        return v * radius * rng.uniform(size=(m, 1)) ** (1.0 / self.m)

    def draw_quadruples(self, rng, m):
        return self._ball(rng, m, self.R), self._ball(rng, m, self.R), self.sample(rng, m), self.sample(rng, m)

    def population_J(self, phi):
        phi = np.atleast_2d(phi)
        dlt = phi - np.asarray(self.phi0)
        return (0.5 * np.einsum("ij,jk,ik->i", dlt, self._C, dlt) + 0.5 * self.noise_sd**2
                + self.lam * np.abs(phi).sum(axis=1))

    @property
    def J_star(self) -> float:
        return float(self.population_J(self.phi_star)[0])

    def set_theta_v(self, phi):
        return np.linalg.norm(np.atleast_2d(phi) - self.phi_star, axis=1)

    def draw_level_set(self, rng, m):
        # rejection from the l1 ball of radius R, which contains the level set J <= J0
        out = []
        while sum(len(o) for o in out) < m:
            cand = self._ball(rng, 4 * m, self.R)
            keep = self.population_J(cand) <= self.ev2 / self.lam
            out.append(cand[keep])
        return np.concatenate(out)[:m]


def estimate_lojasiewicz_lasso(problem: LassoProblem, rng: np.random.Generator, n_points: int = 20_000) -> float:
    """Empirical Lojasiewicz constant: min over sampled level-set points of
    (J(phi) - J*) / ||phi - phi*||^2.  Used only when the exact Hoffman
    constant is out of reach; reports flag the value as estimated.
    """
    phi = problem.draw_level_set(rng, n_points)
    d2 = problem.set_theta_v(phi) ** 2
    ok = d2 > 1e-12
    return float(np.min((problem.population_J(phi[ok]) - problem.J_star) / d2[ok]))


@dataclass(frozen=True)
class EntropicBarycenterProblem(EstimationProblem):
    """Entropic-Wasserstein barycenter of random bump mixtures on a 1-D grid.

    Each data point is a probability vector sum_m w_m B_m, with B_m
    discretised Gaussian bumps and w ~ Dirichlet(1, 1, 1).  Parameters live
    in the simplex with the l1 (total variation) distance.
    """

    size: int = 64
    centers: tuple = (0.2, 0.5, 0.8)
    width: float = 0.08
    lam: float = 0.1
    name: str = "entropic"
    alpha = 1.0

    @functools.cached_property
    def grid(self) -> transport.Grid:
        return transport.Grid.uniform(self.size)

    @functools.cached_property
    def bumps(self) -> np.ndarray:
        return transport.gaussian_bumps(self.grid, self.centers, self.width)

    def sample(self, rng, n):
        return transport.dirichlet_mixtures(rng, self.bumps, n)

    def profile(self, batch) -> transport.StepProfile:
        P = np.asarray(getattr(batch, "samples", batch), float)
        return transport.StepProfile(P, np.full(P.shape[0], 1.0 / P.shape[0]), self.grid.axes[0])

    def solve_weights(self, batch) -> np.ndarray:
        return transport.barycenter_1d_exact(self.profile(batch), self.lam, self.grid.cell_volume)

    def solve_empirical(self, batch):
        return PointSet.of(self.solve_weights(batch))

    @functools.cached_property
    def phi_star(self) -> np.ndarray:
        if len(self.centers) != 3:
            raise ValueError("exact population barycenter needs three mixture components")
        prof = transport.DirichletMixtureProfile(self.bumps, self.grid.axes[0])
        return transport.barycenter_1d_exact(prof, self.lam, self.grid.cell_volume)

    def true_minimizers(self):
        return PointSet.of(self.phi_star)

    def distance(self, p, q):
        return float(np.abs(np.asarray(p) - np.asarray(q)).sum())

    def params(self) -> ConcentrationParams:
        D2 = self.grid.diam**2
        return ConcentrationParams(beta=2.0, alpha=1.0, tau=2.0, j0=math.inf, psi1_a=4.0 * D2, diam_s=0.0)

    def empirical_objective(self, weights: np.ndarray, batch) -> float:
        return transport.quantile_objective(np.asarray(weights, float), self.profile(batch),
                                            self.lam, self.grid.cell_volume)


def verify_entropic_strong_convexity(problem: EntropicBarycenterProblem, batch, n_points: int,
                                     rng: np.random.Generator, tau: float = 2.0,
                                     eps_solver: float = 1e-10) -> dict:
    """Check tau ||phi - phi_hat||_1^2 <= J_hat(phi) - J_hat* + tau * eps over random densities.

    Random densities are flat-Dirichlet draws floored at 1e-12 per cell.
    Returns the worst violation and the smallest observed ratio
    (J_hat(phi) - J_hat*) / ||phi - phi_hat||_1^2.
    """
    prof = problem.profile(batch)
    g = problem.grid
    a_hat = transport.barycenter_1d_exact(prof, problem.lam, g.cell_volume)
    j_hat = transport.quantile_objective(a_hat, prof, problem.lam, g.cell_volume)
    worst, ratio = -math.inf, math.inf
    for _ in range(n_points):
        phi = transport.DiscreteDensity.normalized(rng.dirichlet(np.ones(g.size)), g).floored().weights
        gap = transport.quantile_objective(phi, prof, problem.lam, g.cell_volume) - j_hat
        d2 = np.abs(phi - a_hat).sum() ** 2
        worst = max(worst, tau * d2 - gap - tau * eps_solver)
        ratio = min(ratio, gap / d2)
    return {"max_violation": float(worst), "min_ratio": float(ratio), "j_hat": float(j_hat)}


PROBLEMS = {
    "euclidean": EuclideanBarycenterProblem,
    "spider": SpiderTreeBarycenterProblem,
    "eigenvector": EigenvectorProblem,
    "lasso": LassoProblem,
    "entropic": EntropicBarycenterProblem,
}
