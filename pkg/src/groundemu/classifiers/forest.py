"""Random forest of unpruned CART trees with Gini splits.

Class probabilities are vote fractions: each tree casts one vote for the
majority class of the leaf it routes the input to.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .base import ConstantClassifier, ProbClassifier

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Tree:
    feature: np.ndarray  # -1 at leaves
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    vote: np.ndarray  # leaf class, 0 or 1

    def apply(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.intp)
        active = self.feature[node] >= 0
        while active.any():
            idx = np.nonzero(active)[0]
            nd = node[idx]
            go_left = X[idx, self.feature[nd]] <= self.threshold[nd]
            node[idx] = np.where(go_left, self.left[nd], self.right[nd])
            active[idx] = self.feature[node[idx]] >= 0
        return self.vote[node]


def _best_split(x: np.ndarray, y: np.ndarray):
    """Lowest weighted Gini split of one feature, or None if x is constant."""
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], y[order]
    n = xs.size
    ones_left = np.cumsum(ys)[:-1].astype(float)
    n_left = np.arange(1, n, dtype=float)
    n_right = n - n_left
    ones_right = ys.sum() - ones_left
    zeros_left = n_left - ones_left
    zeros_right = n_right - ones_right
    # n * weighted Gini / 2, symmetric in the two classes
    cost = ones_left * zeros_left / n_left + ones_right * zeros_right / n_right
    valid = xs[1:] > xs[:-1]
    if not valid.any():
        return None
    cost = np.where(valid, cost, np.inf)
    k = int(np.argmin(cost))
    return float(cost[k]), 0.5 * (xs[k] + xs[k + 1])


def grow_tree(X: np.ndarray, y: np.ndarray, mtry: int, rng: np.random.Generator,
              min_node_size: int = 1) -> Tree:
    d = X.shape[1]
    feature, threshold, left, right, vote = [], [], [], [], []

    def new_node():
        for arr, v in ((feature, -1), (threshold, 0.0), (left, -1), (right, -1), (vote, 0)):
            arr.append(v)
        return len(feature) - 1

    root = new_node()
    stack = [(root, np.arange(X.shape[0]))]
    while stack:
        node, idx = stack.pop()
        yi = y[idx]
        ones = int(yi.sum())
        # ties go to the grounded class
        vote[node] = int(ones * 2 > idx.size)
        if ones == 0 or ones == idx.size or idx.size <= min_node_size:
            continue
        best = None
        tried = 0
        for j in rng.permutation(d):
            # keep drawing past mtry only while no usable split has been found
            if tried >= mtry and best is not None:
                break
            tried += 1
            cand = _best_split(X[idx, j], yi)
            if cand is not None and (best is None or cand[0] < best[0]):
                best = (cand[0], int(j), cand[1])
        if best is None:
            continue
        _, j, thr = best
        mask = X[idx, j] <= thr
        lnode, rnode = new_node(), new_node()
        feature[node], threshold[node] = j, thr
        left[node], right[node] = lnode, rnode
        stack.append((rnode, idx[~mask]))
        stack.append((lnode, idx[mask]))

    return Tree(
        feature=np.asarray(feature, dtype=np.intp),
        threshold=np.asarray(threshold, dtype=float),
        left=np.asarray(left, dtype=np.intp),
        right=np.asarray(right, dtype=np.intp),
        vote=np.asarray(vote, dtype=np.int64),
    )


class RandomForestModel(ProbClassifier):
    degenerate = False

    def __init__(self, trees: list[Tree], mtry: int, dim: int):
        self.trees = trees
        self.mtry = mtry
        self.dim = dim

    @property
    def ntree(self) -> int:
        return len(self.trees)

    def votes(self, X) -> np.ndarray:
        X = self._check(X)
        total = np.zeros(X.shape[0], dtype=np.int64)
        for tree in self.trees:
            total += tree.apply(X)
        return total

    def predict_proba(self, X):
        return self.votes(X) / self.ntree


def default_mtry(d: int) -> int:
    return max(1, int(np.floor(np.sqrt(d))))


def fit_rf(X, labels, ntree: int = 500, mtry: int | None = None, rng=None,
           min_node_size: int = 1):
    """Grow ``ntree`` trees on bootstrap resamples of size n."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(labels).astype(np.int64).ravel()
    n, d = X.shape
    if y.size != n:
        raise ValueError(f"X has {n} rows but {y.size} labels were given")
    if n < 2:
        raise ValueError("need at least two training examples")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    if y.min() == y.max():
        logger.warning("single-class training labels; returning constant classifier")
        return ConstantClassifier(int(y[0]), d)
    mtry = default_mtry(d) if mtry is None else int(mtry)
    if not 1 <= mtry <= d:
        raise ValueError(f"mtry must be in [1, {d}], got {mtry}")
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    trees = []
    for _ in range(ntree):
        boot = rng.integers(0, n, size=n)
        trees.append(grow_tree(X[boot], y[boot], mtry, rng, min_node_size))
    return RandomForestModel(trees, mtry, d)
