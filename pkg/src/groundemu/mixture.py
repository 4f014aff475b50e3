"""The double emulator: a point mass at the grounding value mixed with a
shifted lognormal whose log-scale parameters come from a GP.

At each input the predictive distribution is

    F(y) = 0                                   y < g
         = 1 - p                               y = g
         = 1 - p + p * L(y - g + gamma; m, v)  y > g

with p the classifier's probability of being above ground and (m, v) the
GP posterior mean and variance of ln(y - g + gamma).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .classifiers import OracleClassifier, ProbClassifier, fit_rf, fit_svm, label
from .gpe import BasisSpec, GpModel, fit_gp

DEFAULT_GAMMA = 1e-6
DEGENERATE_VAR = 1e-12
CLASSIFIER_KINDS = ("rf", "svm", "oracle")


def _as_out(a):
    a = np.asarray(a, dtype=float)
    return float(a) if a.ndim == 0 else a


@dataclass(frozen=True, eq=False)
class PredictiveMixture:
    """Parameters (p, m, v, g, gamma); fields may be scalars or equal-length arrays."""

    p: float | np.ndarray
    m: float | np.ndarray
    v: float | np.ndarray
    g: float
    gamma: float

    def __post_init__(self):
        p, v = np.asarray(self.p, float), np.asarray(self.v, float)
        if np.any((p < 0) | (p > 1)) or np.any(np.isnan(p)):
            raise ValueError("p must lie in [0, 1]")
        if np.any(v < 0) or np.any(np.isnan(v)):
            raise ValueError("varlog must be nonnegative")
        if not np.all(np.asarray(self.gamma) > 0):
            raise ValueError("gamma must be positive")

    def __len__(self):
        return np.broadcast(np.asarray(self.p), np.asarray(self.m), np.asarray(self.v)).size

    def __getitem__(self, i) -> "PredictiveMixture":
        p, m, v = np.broadcast_arrays(np.asarray(self.p), np.asarray(self.m), np.asarray(self.v))
        return PredictiveMixture(float(p[i]), float(m[i]), float(v[i]), self.g, self.gamma)


def lognormal_moments(m, v):
    """Mean and variance of Lognormal(meanlog=m, varlog=v)."""
    m, v = np.asarray(m, float), np.asarray(v, float)
    return np.exp(m + v / 2.0), np.exp(2.0 * m + v) * np.expm1(v)


def mixture_mean(pm: PredictiveMixture):
    M = lognormal_moments(pm.m, pm.v)[0] + pm.g - pm.gamma
    return _as_out((1.0 - np.asarray(pm.p)) * pm.g + np.asarray(pm.p) * M)


def mixture_var(pm: PredictiveMixture):
    p = np.asarray(pm.p, float)
    lm, lv = lognormal_moments(pm.m, pm.v)
    M = lm + pm.g - pm.gamma
    return _as_out(np.maximum(p * (1.0 - p) * (pm.g - M) ** 2 + p * lv, 0.0))


def mixture_cdf(pm: PredictiveMixture, y):
    y = np.asarray(y, dtype=float)
    p, m, v = (np.asarray(a, float) for a in (pm.p, pm.m, pm.v))
    z = np.maximum(y - pm.g + pm.gamma, np.finfo(float).tiny)
    sd = np.sqrt(np.where(v > 0, v, 1.0))
    L = np.where(v > 0, ndtr((np.log(z) - m) / sd), (np.log(z) >= m).astype(float))
    out = np.where(y < pm.g, 0.0, np.where(y == pm.g, 1.0 - p, 1.0 - p + p * L))
    return _as_out(out)


def sample_mixture(pm: PredictiveMixture, rng, size=None):
    """Draw g with probability 1 - p, otherwise g - gamma + exp(N(m, v))."""
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    shape = size if size is not None else np.broadcast(np.asarray(pm.p), np.asarray(pm.m)).shape
    up = rng.random(shape) < pm.p
    logs = pm.m + np.sqrt(pm.v) * rng.standard_normal(shape)
    out = np.where(up, pm.g - pm.gamma + np.exp(logs), pm.g)
    return _as_out(out)


class LogGpe:
    """Plain GP emulator on ln(y - g + gamma), used as the comparison baseline.

    Its predictive distribution is the mixture with p fixed at 1.
    """

    def __init__(self, gp: GpModel, g: float, gamma: float):
        self.gp = gp
        self.g = float(g)
        self.gamma = float(gamma)

    @property
    def dim(self) -> int:
        return self.gp.dim

    def predict(self, X) -> PredictiveMixture:
        m, v = self.gp.predict(X)
        return PredictiveMixture(np.ones_like(m), m, np.maximum(v, DEGENERATE_VAR), self.g, self.gamma)


def _validate_outputs(y, g):
    y = np.asarray(y, dtype=float).ravel()
    if np.any(y < g):
        raise ValueError(
            f"{int(np.sum(y < g))} outputs lie below the grounding value g={g}"
        )
    return y


def fit_log_gpe(X, y, g: float, gamma: float = DEFAULT_GAMMA, basis: BasisSpec | None = None,
                family="matern52", method="reml", **gp_options) -> LogGpe:
    y = _validate_outputs(y, g)
    gp = fit_gp(X, np.log(y - g + gamma), basis, family, method, **gp_options)
    return LogGpe(gp, g, gamma)


class DoubleEmulator:
    def __init__(self, classifier: ProbClassifier, gp: GpModel, g: float, gamma: float):
        self.classifier = classifier
        self.gp = gp
        self.g = float(g)
        self.gamma = float(gamma)

    @property
    def dim(self) -> int:
        return self.gp.dim

    def predict(self, X) -> PredictiveMixture:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.dim:
            raise ValueError(f"expected {self.dim} input columns, got {X.shape[1]}")
        p = np.clip(self.classifier.predict_proba(X), 0.0, 1.0)
        m, v = self.gp.predict(X)
        return PredictiveMixture(p, m, np.maximum(v, DEGENERATE_VAR), self.g, self.gamma)


def fit_double(
    X,
    y,
    g: float,
    gamma: float = DEFAULT_GAMMA,
    basis: BasisSpec | None = None,
    family="matern52",
    method="reml",
    classifier_kind: str = "rf",
    rng=None,
    oracle=None,
    *,
    ntree: int = 500,
    svm_c: float = 1.0,
    gp_options: dict | None = None,
) -> DoubleEmulator:
    """Fit the classifier on all runs and the log-scale GP on the runs above ground.

    ``oracle`` is the true simulator (a callable on input rows) and is only
    needed when ``classifier_kind == "oracle"``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = _validate_outputs(y, g)
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    labels = label(y, g)
    up = labels == 1
    q = X.shape[1] + 1
    if up.sum() < q + 2:
        raise ValueError(
            f"only {int(up.sum())} runs lie above the grounding value; "
            f"the log-scale GP needs at least {q + 2}"
        )
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)

    if classifier_kind == "rf":
        clf = fit_rf(X, labels, ntree=ntree, rng=rng)
    elif classifier_kind == "svm":
        clf = fit_svm(X, labels, C=svm_c, rng=rng)
    elif classifier_kind == "oracle":
        if oracle is None:
            raise ValueError("the oracle classifier needs the true simulator")
        clf = OracleClassifier(oracle, g, X.shape[1])
    else:
        raise ValueError(f"unknown classifier kind {classifier_kind!r}; expected one of {CLASSIFIER_KINDS}")

    gp = fit_gp(X[up], np.log(y[up] - g + gamma), basis, family, method, **(gp_options or {}))
    return DoubleEmulator(clf, gp, g, gamma)


def predict_mixture(model, xstar) -> PredictiveMixture:
    """Predictive mixture at a single input."""
    xstar = np.atleast_1d(np.asarray(xstar, dtype=float))
    if xstar.shape != (model.dim,):
        raise ValueError(f"expected a vector of length {model.dim}, got shape {xstar.shape}")
    return model.predict(xstar[None, :])[0]
