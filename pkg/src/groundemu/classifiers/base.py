from __future__ import annotations

import numpy as np


def label(y, g):
    """1 where the output is strictly above the grounding value, else 0."""
    out = (np.asarray(y, dtype=float) > g).astype(int)
    return int(out) if out.ndim == 0 else out


class ProbClassifier:
    """Estimates P(output > g) at new inputs."""

    dim: int

    def predict_proba(self, X) -> np.ndarray:
        raise NotImplementedError

    def _check(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.dim:
            raise ValueError(f"expected {self.dim} input columns, got {X.shape[1]}")
        return X


class ConstantClassifier(ProbClassifier):
    """Returned when the training labels contain a single class."""

    degenerate = True

    def __init__(self, value: int, dim: int):
        self.value = float(value)
        self.dim = dim

    def predict_proba(self, X):
        return np.full(self._check(X).shape[0], self.value)


class OracleClassifier(ProbClassifier):
    """Knows the true simulator; returns the exact class membership."""

    def __init__(self, simulator, g: float, dim: int):
        self.simulator = simulator
        self.g = float(g)
        self.dim = dim

    def predict_proba(self, X):
        X = self._check(X)
        return label(np.asarray(self.simulator(X), dtype=float), self.g).astype(float)


def predict_proba(model: ProbClassifier, x):
    """Class-1 probability at a single input (scalar) or at each row of a matrix."""
    x = np.asarray(x, dtype=float)
    if x.ndim <= 1:
        if x.size != model.dim:
            raise ValueError(f"expected a vector of length {model.dim}, got {x.size}")
        return float(model.predict_proba(x.reshape(1, -1))[0])
    return model.predict_proba(x)
