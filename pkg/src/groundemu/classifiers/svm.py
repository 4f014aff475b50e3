"""C-SVC with a Gaussian kernel, trained by SMO, with Platt-scaled outputs.

The dual is solved with second-order working-set selection (the scheme
used by LIBSVM). Probabilities come from a sigmoid fitted to the
in-sample decision values by Newton's method with backtracking, using
smoothed targets to avoid overfitting the sigmoid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import ProbClassifier

TAU = 1e-12


class SvmFitError(RuntimeError):
    pass


def median_heuristic(X: np.ndarray, rng, max_points: int = 100) -> float:
    """Inverse RBF width: 1 / median squared pairwise distance of a subsample."""
    n = X.shape[0]
    if n > max_points:
        X = X[np.sort(rng.choice(n, size=max_points, replace=False))]
    diff = X[:, None, :] - X[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)[np.triu_indices(X.shape[0], k=1)]
    d2 = d2[d2 > 0]
    if d2.size == 0:
        raise SvmFitError("all training inputs coincide; cannot set the kernel width")
    return 1.0 / float(np.median(d2))


def rbf(A: np.ndarray, B: np.ndarray, inv_width: float) -> np.ndarray:
    d2 = (
        np.sum(A * A, axis=1)[:, None]
        + np.sum(B * B, axis=1)[None, :]
        - 2.0 * A @ B.T
    )
    return np.exp(-inv_width * np.maximum(d2, 0.0))


@dataclass
class SmoResult:
    alpha: np.ndarray
    rho: float
    iterations: int


def smo(K: np.ndarray, y: np.ndarray, C: float, eps: float = 1e-3,
        max_iter: int | None = None) -> SmoResult:
    """Solve min 1/2 a^T Q a - e^T a, 0 <= a <= C, y^T a = 0 with Q = yy^T * K."""
    n = y.size
    Q = (y[:, None] * y[None, :]) * K
    QD = np.diag(Q).copy()
    alpha = np.zeros(n)
    grad = -np.ones(n)
    max_iter = max_iter if max_iter is not None else max(10_000_000, 100 * n)
    pos = y > 0

    it = 0
    while True:
        upper = alpha >= C
        lower = alpha <= 0
        in_up = np.where(pos, ~upper, ~lower)
        in_low = np.where(pos, ~lower, ~upper)
        score = -y * grad
        if not in_up.any() or not in_low.any():
            break
        up_score = np.where(in_up, score, -np.inf)
        i = int(np.argmax(up_score))
        gmax = up_score[i]
        gmin = np.min(np.where(in_low, score, np.inf))
        if gmax - gmin < eps:
            break
        if it >= max_iter:
            raise SvmFitError(f"SMO did not converge in {max_iter} iterations")
        it += 1

        b = gmax - score
        cand = in_low & (b > 0)
        a = QD[i] + QD - 2.0 * y[i] * y * Q[i]
        a = np.where(a > 0, a, TAU)
        obj = np.where(cand, -(b * b) / a, np.inf)
        j = int(np.argmin(obj))
        if not np.isfinite(obj[j]):
            raise SvmFitError("SMO cannot make progress on this data")

        old_i, old_j = alpha[i], alpha[j]
        quad = max(QD[i] + QD[j] - 2.0 * y[i] * y[j] * Q[i, j], TAU)
        ai, aj = old_i, old_j
        if y[i] != y[j]:
            delta = (-grad[i] - grad[j]) / quad
            diff = ai - aj
            ai += delta
            aj += delta
            if diff > 0:
                if aj < 0:
                    aj, ai = 0.0, diff
            elif ai < 0:
                ai, aj = 0.0, -diff
            if diff > 0:
                if ai > C:
                    ai, aj = C, C - diff
            elif aj > C:
                aj, ai = C, C + diff
        else:
            delta = (grad[i] - grad[j]) / quad
            total = ai + aj
            ai -= delta
            aj += delta
            if total > C:
                if ai > C:
                    ai, aj = C, total - C
            elif aj < 0:
                aj, ai = 0.0, total
            if total > C:
                if aj > C:
                    aj, ai = C, total - C
            elif ai < 0:
                ai, aj = 0.0, total
        alpha[i], alpha[j] = ai, aj
        grad += Q[i] * (ai - old_i) + Q[j] * (aj - old_j)

    # offset: average over free variables, midpoint of the feasible range otherwise
    yg = y * grad
    free = (alpha > 0) & (alpha < C)
    if free.any():
        rho = float(np.mean(yg[free]))
    else:
        upper = alpha >= C
        lower = alpha <= 0
        ub_mask = (upper & (y < 0)) | (lower & (y > 0))
        lb_mask = (upper & (y > 0)) | (lower & (y < 0))
        ub = float(np.min(yg[ub_mask])) if ub_mask.any() else np.inf
        lb = float(np.max(yg[lb_mask])) if lb_mask.any() else -np.inf
        rho = 0.5 * (ub + lb)
    return SmoResult(alpha=alpha, rho=rho, iterations=it)


def platt_fit(dec: np.ndarray, labels: np.ndarray, max_iter: int = 100):
    """Sigmoid parameters (A, B) with P(class 1 | f) = 1 / (1 + exp(A f + B))."""
    prior1 = float(np.sum(labels == 1))
    prior0 = float(labels.size - prior1)
    hi_t = (prior1 + 1.0) / (prior1 + 2.0)
    lo_t = 1.0 / (prior0 + 2.0)
    t = np.where(labels == 1, hi_t, lo_t)
    min_step, sigma, eps = 1e-10, 1e-12, 1e-5

    def fval(A, B):
        z = dec * A + B
        return float(np.sum(np.where(z >= 0, t * z + np.log1p(np.exp(-np.abs(z))),
                                     (t - 1.0) * z + np.log1p(np.exp(-np.abs(z))))))

    A, B = 0.0, np.log((prior0 + 1.0) / (prior1 + 1.0))
    f = fval(A, B)
    for _ in range(max_iter):
        z = dec * A + B
        ez = np.exp(-np.abs(z))
        p = np.where(z >= 0, ez / (1.0 + ez), 1.0 / (1.0 + ez))
        q = 1.0 - p
        d2 = p * q
        h11 = sigma + np.sum(dec * dec * d2)
        h22 = sigma + np.sum(d2)
        h21 = np.sum(dec * d2)
        d1 = t - p
        g1 = np.sum(dec * d1)
        g2 = np.sum(d1)
        if abs(g1) < eps and abs(g2) < eps:
            break
        det = h11 * h22 - h21 * h21
        dA = -(h22 * g1 - h21 * g2) / det
        dB = -(-h21 * g1 + h11 * g2) / det
        gd = g1 * dA + g2 * dB
        step = 1.0
        while step >= min_step:
            newA, newB = A + step * dA, B + step * dB
            newf = fval(newA, newB)
            if newf < f + 1e-4 * step * gd:
                A, B, f = newA, newB, newf
                break
            step /= 2.0
        else:
            break
    return float(A), float(B)


class SvmModel(ProbClassifier):
    degenerate = False

    def __init__(self, support: np.ndarray, coef: np.ndarray, rho: float,
                 inv_width: float, platt: tuple[float, float], C: float,
                 alpha: np.ndarray, y: np.ndarray):
        self.support = support
        self.coef = coef  # alpha_i * y_i for support vectors
        self.rho = rho
        self.inv_width = inv_width
        self.platt_a, self.platt_b = platt
        self.C = C
        self.alpha = alpha
        self.y = y
        self.dim = support.shape[1]

    def decision_function(self, X) -> np.ndarray:
        X = self._check(X)
        return rbf(X, self.support, self.inv_width) @ self.coef - self.rho

    def predict_proba(self, X):
        z = self.platt_a * self.decision_function(X) + self.platt_b
        # 1 / (1 + e^z) without overflow
        ez = np.exp(-np.abs(z))
        return np.where(z >= 0, ez / (1.0 + ez), 1.0 / (1.0 + ez))


def fit_svm(X, labels, C: float = 1.0, rbf_width: float | None = None, rng=None,
            eps: float = 1e-3) -> SvmModel:
    """Fit the SVM; ``rbf_width`` is the inverse width (median heuristic if None)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    labels = np.asarray(labels).astype(np.int64).ravel()
    if labels.size != X.shape[0]:
        raise ValueError(f"X has {X.shape[0]} rows but {labels.size} labels were given")
    counts = np.bincount(labels, minlength=2)
    if counts.size != 2 or counts.min() < 2:
        raise SvmFitError(
            f"need at least two examples of each class, got {counts[0]} grounded "
            f"and {counts[1]} non-grounded"
        )
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    inv_width = median_heuristic(X, rng) if rbf_width is None else float(rbf_width)
    y = np.where(labels == 1, 1.0, -1.0)
    K = rbf(X, X, inv_width)
    res = smo(K, y, C, eps=eps)
    sv = res.alpha > 0
    if not sv.any():
        raise SvmFitError("no support vectors found")
    dec = K[:, sv] @ (res.alpha[sv] * y[sv]) - res.rho
    platt = platt_fit(dec, labels)
    return SvmModel(X[sv], res.alpha[sv] * y[sv], res.rho, inv_width, platt, C,
                    res.alpha, y)
