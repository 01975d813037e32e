"""Hoffman constants by subset enumeration, the LASSO certificate matrix and
the LASSO error-bound constants built from them.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np

E = math.e
MAX_ROWS = 22
RANK_RTOL = 1e-10


@dataclass(frozen=True)
class HoffmanResult:
    h: float
    witness_subset: Tuple[int, ...]
    n_subsets_checked: int


@dataclass(frozen=True)
class LassoCertificate:
    matrix: np.ndarray
    q: int
    lam: float


def hoffman_constant(C: np.ndarray, max_rows: int = MAX_ROWS) -> HoffmanResult:
    """Max over row subsets I with C_I of full row rank of 1/sigma_min(C_I).

    Only subsets with |I| <= number of columns can have full row rank, so the
    enumeration runs over those sizes.  Each size is handled by one batched
    SVD.  Rows are put in a canonical (lexicographic) order first, which makes
    the result independent of the input row order bit for bit.

    Parameters
    ----------
    C : (k, l) array
    max_rows : int
        Enumeration cap on k.

    Returns
    -------
    HoffmanResult
        ``witness_subset`` holds original row indices (sorted) of the
        lexicographically first subset attaining the maximum.
    """
    C = np.atleast_2d(np.asarray(C, dtype=float))
    k, l = C.shape
    if k > max_rows:
        raise ValueError(f"enumeration too large: {k} rows exceeds cap {max_rows}")
    order = np.lexsort(C.T[::-1])
    Cs = C[order]
    best, witness, checked = -math.inf, None, 0
    for size in range(1, min(k, l) + 1):
        combos = np.array(list(itertools.combinations(range(k), size)), dtype=int)
        sv = np.linalg.svd(Cs[combos], compute_uv=False)  # (m, size), descending
        checked += len(combos)
        smax, smin = sv[:, 0], sv[:, -1]
        full = (smax > 0) & (smin > RANK_RTOL * smax)
        if not full.any():
            continue
        vals = np.where(full, 1.0 / np.where(full, smin, 1.0), -math.inf)
        top = vals.max()
        if top < best:
            continue
        for idx in np.flatnonzero(vals == top):
            cand = tuple(sorted(int(order[j]) for j in combos[idx]))
            if top > best or witness is None or cand < witness:
                best, witness = top, cand
    if witness is None:
        raise ValueError("no full-row-rank subset")
    return HoffmanResult(float(best), witness, checked)


def sign_rows(q: int) -> np.ndarray:
    """All 2^q vectors of the form (+-1, ..., +-1), starting with all ones."""
    return np.array(list(itertools.product([1.0, -1.0], repeat=q)))


def build_lasso_certificate(A: np.ndarray, lam: float) -> LassoCertificate:
    """Assemble the block matrix

        [ E    -1 ]
        [ 0     1 ]
        [ A     0 ]
        [ 0   lam ]

    of shape (2^q + 1 + p + 1, q + 1), E being the 2^q sign rows.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    p, q = A.shape
    if q > 4:
        raise ValueError(f"design dimension q={q} > 4: certificate too large for exact enumeration")
    if lam <= 0:
        raise ValueError("lambda must be positive")
    Es = sign_rows(q)
    top = np.hstack([Es, -np.ones((len(Es), 1))])
    one = np.hstack([np.zeros((1, q)), [[1.0]]])
    mid = np.hstack([A, np.zeros((p, 1))])
    last = np.hstack([np.zeros((1, q)), [[float(lam)]]])
    M = np.vstack([top, one, mid, last])
    M.setflags(write=False)
    return LassoCertificate(M, q, float(lam))


def lasso_tau_lower_bound(H: float, lam: float, R: float, norm_A: float, ev2: float) -> float:
    """(4 H^2 [1 + lam R + (R||A|| + sqrt(EV^2)) (4 R||A|| + sqrt(EV^2))])^-1."""
    for name, v in (("H", H), ("lambda", lam), ("R", R), ("norm_A", norm_A), ("ev2", ev2)):
        if not v > 0:
            raise ValueError(f"{name} must be positive")
    sv = math.sqrt(ev2)
    return 1.0 / (4.0 * H * H * (1.0 + lam * R + (R * norm_A + sv) * (4.0 * R * norm_A + sv)))


@dataclass(frozen=True)
class LassoRates:
    c1: float
    c2: float
    m: int

    def eta(self, n: float) -> float:
        return 2.0 * math.exp(-self.c1 * n)

    def kappa(self, n: float) -> float:
        return self.m * math.exp(-self.c2 * n)


def lasso_assumption_rates(psi2_theta: float, psi2_v: float, l2_v: float, m: int,
                           H: float, cov_norm: float) -> Tuple[Callable, Callable]:
    """Failure-probability functions eta(n) = 2 exp(-c1 n) and kappa(n) = m exp(-c2 n)."""
    r = lasso_rate_constants(psi2_theta, psi2_v, l2_v, m, H, cov_norm)
    return r.eta, r.kappa


def lasso_rate_constants(psi2_theta: float, psi2_v: float, l2_v: float, m: int,
                         H: float, cov_norm: float) -> LassoRates:
    """Exponents c1 and c2 of the LASSO failure probabilities.

    c1 = ||V||_2^4 / (2 (e^2 psi_V^4 + e psi_V^2 ||V||_2^2));
    c2 is the smaller of the noise exponent at level (sqrt2 - 1) ||V||_2^2 and
    the covariance exponent c^2 / (2 (e^2 m^2 psi_theta^4 + e m psi_theta^2 c))
    with c = min((sqrt2 - 1)/sqrt2 / H^2, (sqrt2 - 1) ||Cov||).
    """
    for name, v in (("psi2_theta", psi2_theta), ("psi2_v", psi2_v), ("l2_v", l2_v),
                    ("m", m), ("H", H), ("cov_norm", cov_norm)):
        if not v > 0:
            raise ValueError(f"{name} must be positive")
    r2 = math.sqrt(2.0) - 1.0
    c1 = l2_v**4 / (2.0 * (E**2 * psi2_v**4 + E * psi2_v**2 * l2_v**2))
    noise = r2**2 * l2_v**4 / (2.0 * (E**2 * psi2_v**4 + E * psi2_v**2 * r2 * l2_v**2))
    c = min(r2 / math.sqrt(2.0) / H**2, r2 * cov_norm)
    cov = c * c / (2.0 * (E**2 * m**2 * psi2_theta**4 + E * m * psi2_theta**2 * c))
    return LassoRates(c1, min(noise, cov), int(m))
