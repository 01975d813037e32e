"""Independent re-derivation of the frozen constants used in the test suite.

Nothing here imports ``ermconc``.  Each value is computed from its defining
formula with mpmath at 40 digits, brute force, or a general-purpose convex
solver, then pasted into the tests.  Run ``python tests/oracles/derive.py``
to reprint them.
"""
import itertools

import mpmath as mp
import numpy as np

mp.mp.dps = 40


def psi_from_mgf(mgf):
    # smallest c with E exp(|X|/c) = 2  <=>  mgf(1/c) = 2
    s = mp.findroot(lambda s: mgf(s) - 2, 0.5)
    return 1 / s


def uniform_centered():
    # |U - 1/2| is Uniform[0, 1/2]
    return psi_from_mgf(lambda s: mp.quad(lambda w: 2 * mp.e ** (s * w), [0, 0.5]))


def uniform_gap():
    # |U - U'| has density 2(1 - w) on [0, 1]
    return psi_from_mgf(lambda s: mp.quad(lambda w: 2 * (1 - w) * mp.e ** (s * w), [0, 1]))


def spider(probs=(0.7, 0.15, 0.15)):
    same = sum(mp.mpf(p) ** 2 for p in probs)
    gap = lambda s: mp.quad(lambda w: 2 * (1 - w) * mp.e ** (s * w), [0, 1])
    tri = lambda s: mp.quad(lambda w: (w if w < 1 else 2 - w) * mp.e ** (s * w), [0, 1, 2])
    return psi_from_mgf(lambda s: same * gap(s) + (1 - same) * tri(s))


def gaussian_norm_2d(v1=2.0, v2=0.5):
    # cartesian double integral of exp(s ||z||) against the N(0, diag(v1, v2)) density
    mp.mp.dps = 20
    dens = lambda x, y: mp.e ** (-x * x / (2 * v1) - y * y / (2 * v2)) / (2 * mp.pi * mp.sqrt(v1 * v2))
    R = 14
    mgf = lambda s: mp.quad(lambda x, y: dens(x, y) * mp.e ** (s * mp.sqrt(x * x + y * y)), [-R, 0, R], [-R, 0, R])
    val = psi_from_mgf(mgf)
    mp.mp.dps = 40
    return val


def theorem_b15_a1(n=10**4, delta=0.05, pn=mp.mpf("1e-6")):
    # L = 1, diam = 0: q = 1/2, Q = 1, s = 1, c1 = 12^3, c2 = 2 * 8^2, K = 4 * c2
    beta, alpha = mp.mpf(1.5), mp.mpf(1)
    gap = beta - alpha
    q, Q, s = min(gap, 1), max(gap, 1), min(1, 2 / gap - 1)
    c1 = (4 * beta / gap) ** (beta / gap)
    c2 = 2 * max(4 * alpha / gap, 1) ** (alpha / gap)
    K = 4 * c2
    lg = mp.log(1 / mp.mpf(delta))
    main = c1 ** (q / beta) * mp.mpf(n) ** (-alpha / (beta * Q)) + 2 ** (1 / Q) * mp.e * (
        2 * mp.sqrt(mp.mpf(n) ** -s * lg) + mp.mpf(n) ** -s * lg)
    C = K ** (q / beta) + 2 ** (2 + 1 / Q) * mp.mpf(n) ** (1 - 1 / Q)
    return c1, c2, K, (main + C * pn ** (q / (2 * beta))) ** (1 / q)


def hoffman_bruteforce(C):
    # every nonempty subset, plain rank test
    C = np.asarray(C, float)
    best = 0.0
    for r in range(1, C.shape[0] + 1):
        for I in itertools.combinations(range(C.shape[0]), r):
            sv = np.linalg.svd(C[list(I)], compute_uv=False)
            if len(I) <= C.shape[1] and sv[-1] > 1e-10 * sv[0]:
                best = max(best, 1 / sv[-1])
    return best


def lasso_population():
    import cvxpy as cp

    S = np.array([[1.0, 0.3, 0.0], [0.3, 1.0, 0.2], [0.0, 0.2, 1.0]])
    phi0 = np.array([1.0, -0.5, 0.0])
    x = cp.Variable(3)
    obj = 0.5 * cp.quad_form(x - phi0, S) + 0.1 * cp.norm1(x)
    cp.Problem(cp.Minimize(obj)).solve(solver="CLARABEL", tol_gap_abs=1e-14, tol_gap_rel=1e-14, tol_feas=1e-14)
    return x.value


def eigen_rate(eig=(2, 1, 0.75, 0.5, 0.25)):
    d, gap = len(eig), mp.mpf(eig[0] - eig[1])
    psi2 = mp.sqrt(mp.mpf(8) / 3 * max(eig))
    c = gap**2 / (32 * mp.e**2 * d**2 * psi2**4 + 8 * mp.e * d * psi2**2 * gap)
    return c, 2 * d * mp.pi**2 * psi2**2 / gap


if __name__ == "__main__":
    print("psi1 |U-1/2|      ", mp.nstr(uniform_centered(), 17))
    print("psi1 |U-U'|       ", mp.nstr(uniform_gap(), 17))
    print("psi1 spider       ", mp.nstr(spider(), 17))
    print("psi1 gauss 2d     ", mp.nstr(gaussian_norm_2d(), 15))
    c1, c2, K, val = theorem_b15_a1()
    print("b=1.5 a=1 c1 c2 K ", c1, c2, K)
    print("b=1.5 a=1 bound   ", mp.nstr(val, 17))
    print("eigen c, L        ", [mp.nstr(v, 17) for v in eigen_rate()])
    print("lasso phi*        ", repr(lasso_population()))
