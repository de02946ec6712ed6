"""Hard-margin linear SVM on precomputed features.

The hard-margin problem ``min 1/2 ||w||^2  s.t.  y_i (w . x_i + b) >= 1`` is
solved through its dual with a large box bound ``C`` (the hard margin is the
``C -> inf`` limit). With a bias the dual carries the equality constraint
``sum_i alpha_i y_i = 0`` and is solved by SMO with second-order working-pair
selection; without a bias it is plain coordinate ascent. Kernel rows are
computed on demand from the feature matrix and cached.

After convergence any multiplier pinned at ``C`` or any remaining margin
violation means the data are not linearly separable, and
``SeparabilityError`` is raised. On non-separable data the multipliers
grow roughly linearly with the update count, so reaching that verdict costs
a number of updates proportional to ``C``.
"""

from dataclasses import dataclass, field

import numpy as np

_TAU = 1e-12
_ROW_CACHE_BYTES = 512 * 2**20


class _KernelRows:
    """Linear-kernel rows ``X @ X[i]``, cached; SMO revisits the same few support vectors."""

    def __init__(self, X):
        self.X = X
        self.rows = {}
        self.limit = max(16, _ROW_CACHE_BYTES // (8 * len(X)))

    def __getitem__(self, i):
        row = self.rows.get(i)
        if row is None:
            if len(self.rows) >= self.limit:
                self.rows.pop(next(iter(self.rows)))
            row = self.rows[i] = self.X @ self.X[i]
        return row


class SeparabilityError(RuntimeError):
    """Training data admit no separating hyperplane (within solver tolerance)."""

    def __init__(self, message, index):
        super().__init__(f"{message} (worst sample index {index})")
        self.index = int(index)


@dataclass(frozen=True)
class SolverConfig:
    C: float = 1e6
    tol: float = 1e-6
    max_iter: int = 10_000_000
    fit_intercept: bool = True


@dataclass(frozen=True)
class SolverDiagnostics:
    iterations: int
    kkt_gap: float
    max_violation: float
    margin: float
    support_vectors: int


@dataclass(frozen=True)
class LinearModel:
    w: np.ndarray
    b: float
    diagnostics: SolverDiagnostics = field(compare=False)

    def decision_value(self, features):
        features = np.asarray(features, dtype=float)
        if features.shape[-1] != self.w.shape[0]:
            raise ValueError(f"feature dimension {features.shape[-1]} != model dimension {self.w.shape[0]}")
        return features @ self.w + self.b

    def predict(self, features):
        """+1 (forbidden) where the decision value is >= 0, else -1."""
        return np.where(self.decision_value(features) >= 0.0, 1, -1)


def decision_value(model, features):
    return model.decision_value(features)


def _check_data(X, y):
    X = np.ascontiguousarray(X, dtype=float)
    y = np.asarray(y)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ValueError("expected X of shape (m, p) and y of shape (m,)")
    if X.shape[0] < 2:
        raise ValueError("need at least two training samples")
    if not np.all(np.isfinite(X)):
        raise ValueError("features must be finite")
    if not np.all(np.isin(y, (-1, 1))):
        raise ValueError("labels must be -1 or +1")
    if np.all(y == y[0]):
        raise ValueError("training data contain a single class")
    return X, y.astype(float)


def _smo_bias(X, y, C, tol, max_iter):
    m = len(y)
    diag = np.einsum("ij,ij->i", X, X)
    rows = _KernelRows(X)
    alpha = np.zeros(m)
    grad = -np.ones(m)  # gradient of 1/2 a'Qa - e'a, Q_ij = y_i y_j x_i.x_j
    pos = y > 0
    it = 0
    gap = np.inf
    while it < max_iter:
        score = -y * grad
        up = np.where(pos, alpha < C, alpha > 0)
        low = np.where(pos, alpha > 0, alpha < C)
        s_up = np.where(up, score, -np.inf)
        i = int(np.argmax(s_up))
        g_max = s_up[i]
        s_low = np.where(low, score, np.inf)
        gap = g_max - s_low.min()
        if gap <= tol:
            break
        k_i = rows[i]
        b_vec = g_max - score
        cand = low & (b_vec > 0)
        a_vec = diag[i] + diag - 2.0 * k_i
        a_vec = np.where(a_vec > 0, a_vec, _TAU)
        obj = np.where(cand, -(b_vec * b_vec) / a_vec, np.inf)
        j = int(np.argmin(obj))
        k_j = rows[j]

        yi, yj = y[i], y[j]
        ai_old, aj_old = alpha[i], alpha[j]
        quad = max(diag[i] + diag[j] - 2.0 * k_i[j], _TAU)
        if yi != yj:
            delta = (-grad[i] - grad[j]) / quad
            diff = ai_old - aj_old
            ai, aj = ai_old + delta, aj_old + delta
            if diff > 0 and aj < 0:
                aj, ai = 0.0, diff
            elif diff <= 0 and ai < 0:
                ai, aj = 0.0, -diff
            if diff > 0 and ai > C:
                ai, aj = C, C - diff
            elif diff <= 0 and aj > C:
                aj, ai = C, C + diff
        else:
            delta = (grad[i] - grad[j]) / quad
            total = ai_old + aj_old
            ai, aj = ai_old - delta, aj_old + delta
            if total > C and ai > C:
                ai, aj = C, total - C
            elif total <= C and aj < 0:
                aj, ai = 0.0, total
            if total > C and aj > C:
                aj, ai = C, total - C
            elif total <= C and ai < 0:
                ai, aj = 0.0, total
        dai, daj = ai - ai_old, aj - aj_old
        alpha[i], alpha[j] = ai, aj
        grad += y * (yi * dai * k_i + yj * daj * k_j)
        it += 1

    score = -y * grad
    free = (alpha > 0) & (alpha < C)
    if np.any(free):
        b = float(score[free].mean())
    else:
        up = np.where(pos, alpha < C, alpha > 0)
        low = np.where(pos, alpha > 0, alpha < C)
        b = 0.5 * (score[up].max() + score[low].min())
    return alpha, b, it, float(gap)


def _cd_homogeneous(X, y, C, tol, max_iter):
    m = len(y)
    diag = np.maximum(np.einsum("ij,ij->i", X, X), _TAU)
    rows = _KernelRows(X)
    alpha = np.zeros(m)
    grad = -np.ones(m)
    it = 0
    worst = np.inf
    while it < max_iter:
        pg = np.where(alpha <= 0, np.minimum(grad, 0.0), np.where(alpha >= C, np.maximum(grad, 0.0), grad))
        i = int(np.argmax(np.abs(pg)))
        worst = abs(pg[i])
        if worst <= tol:
            break
        new = min(max(alpha[i] - grad[i] / diag[i], 0.0), C)
        step = new - alpha[i]
        alpha[i] = new
        grad += step * y[i] * y * rows[i]
        it += 1
    return alpha, 0.0, it, float(worst)


def train_hard_svm(X, y, config=None):
    """Train a hard-margin SVM on feature matrix ``X`` (m, p) with labels ``y`` in {-1, +1}."""
    config = config or SolverConfig()
    X, yf = _check_data(X, y)
    solver = _smo_bias if config.fit_intercept else _cd_homogeneous
    alpha, b, iterations, gap = solver(X, yf, config.C, config.tol, config.max_iter)

    w = X.T @ (alpha * yf)
    margins = yf * (X @ w + b)
    worst = int(np.argmin(margins))
    violation = max(0.0, 1.0 - float(margins[worst]))
    if np.any(alpha >= config.C * (1.0 - 1e-9)):
        raise SeparabilityError("a dual multiplier reached the box bound C", int(np.argmax(alpha)))
    if gap > config.tol or violation > config.tol:
        raise SeparabilityError(
            f"margin constraints still violated after {iterations} updates "
            f"(KKT gap {gap:.3g}, violation {violation:.3g})", worst)
    norm = float(np.linalg.norm(w))
    if norm == 0.0:
        raise SeparabilityError("solution has w = 0", worst)
    diag = SolverDiagnostics(iterations=iterations, kkt_gap=gap, max_violation=violation,
                             margin=1.0 / norm, support_vectors=int(np.count_nonzero(alpha)))
    return LinearModel(w=w, b=float(b), diagnostics=diag)
