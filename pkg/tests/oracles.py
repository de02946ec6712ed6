"""Independent reference computations used by the tests.

Nothing here imports the code under test.
"""

from itertools import combinations

import mpmath
import numpy as np


def max_margin_brute_force(X, y, fit_intercept=True):
    """Maximal geometric margin by enumerating candidate support sets.

    For each subset S (at most p + 1 points, or p without a bias) the
    minimum-norm (w, b) with y_i (w . x_i + b) = 1 on S is found by least
    squares; the feasible candidate with the smallest ||w|| is optimal.
    Returns ``(margin, w, b)``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    m, p = X.shape
    best = (np.inf, None, None)
    top = p + 1 if fit_intercept else p
    for size in range(1, top + 1):
        for S in combinations(range(m), size):
            S = list(S)
            if fit_intercept:
                if len(set(y[S])) < 2:
                    continue
                # minimise ||w|| only: solve the KKT system of the subproblem
                k = len(S)
                G = (X[S] @ X[S].T) * np.outer(y[S], y[S])
                K = np.zeros((k + 1, k + 1))
                K[:k, :k] = G
                K[:k, k] = y[S]
                K[k, :k] = y[S]
                rhs = np.concatenate([np.ones(k), [0.0]])
                sol, *_ = np.linalg.lstsq(K, rhs, rcond=None)
                a, b = sol[:k], sol[k]
                w = X[S].T @ (a * y[S])
            else:
                w, *_ = np.linalg.lstsq(X[S] * y[S, None], np.ones(len(S)), rcond=None)
                b = 0.0
            if not np.allclose(y[S] * (X[S] @ w + b), 1.0, atol=1e-9):
                continue
            if np.all(y * (X @ w + b) >= 1.0 - 1e-9):
                norm = np.linalg.norm(w)
                if 0 < norm < best[0]:
                    best = (norm, w, b)
    norm, w, b = best
    return 1.0 / norm, w, b


def random_separable_instance(rng, max_points=12, max_dim=3, gap=0.15):
    """Linearly separable data (with a bias) of at most ``max_points`` points."""
    p = int(rng.integers(1, max_dim + 1))
    m = int(rng.integers(2, max_points + 1))
    w0 = rng.normal(size=p)
    w0 /= np.linalg.norm(w0)
    b0 = rng.uniform(-0.5, 0.5)
    X, y = [], []
    while len(X) < m:
        x = rng.uniform(-2, 2, size=p)
        s = x @ w0 + b0
        if abs(s) < gap:
            continue
        X.append(x)
        y.append(1 if s > 0 else -1)
    y = np.array(y)
    if np.all(y == y[0]):
        X[0] = -(b0 + y[0] * 1.0) * w0  # mirror one point across the plane
        y[0] = -y[0]
    return np.array(X), y


mpmath.mp.dps = 40


def sample_complexity_mp(epsilon, xi, delta, d):
    eps, xi, delta = mpmath.mpf(epsilon), mpmath.mpf(xi), mpmath.mpf(delta)
    power = mpmath.power(mpmath.sqrt(d) / delta, mpmath.mpf(9) * d / 4)
    return (mpmath.power(9, mpmath.mpf(9) / 4) / 4 * power + 8 * mpmath.log(2 / xi)) / eps ** 2


def z_critical_mp(xi):
    # upper xi/2 quantile via the inverse complementary error function
    return mpmath.sqrt(2) * mpmath.erfinv(1 - mpmath.mpf(xi))


def interior_error_mp(epsilon, xi, interior_count, sample_count):
    p = mpmath.mpf(interior_count) / sample_count
    s = z_critical_mp(xi) * mpmath.sqrt(p * (1 - p) / sample_count)
    return (mpmath.mpf(epsilon) - (1 - p) - s) / (p + s)
