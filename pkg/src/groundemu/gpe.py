"""Universal kriging emulator with a constant-plus-linear trend.

Hyperparameters are the per-dimension lengthscales; the regression
coefficients and the process variance are profiled out in closed form
(generalized least squares), leaving a likelihood-type objective in the
lengthscales alone which is minimized by multistart Nelder-Mead.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

import numpy as np
from scipy.linalg import cho_factor, solve_triangular
from scipy.optimize import minimize

from .design import lhd
from .kernels import JITTER, Family, KernelSpec, cross_corr, gram

logger = logging.getLogger(__name__)

SIGMA2_FLOOR = 1e-12


class Method(str, Enum):
    MLE = "mle"
    REML = "reml"

    @classmethod
    def parse(cls, value: "str | Method") -> "Method":
        if isinstance(value, Method):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValueError(f"unknown estimation method {value!r}") from None


class RankDeficiencyError(np.linalg.LinAlgError):
    """Raised when the generalized least-squares system G^T R^-1 G is singular."""


@dataclass(frozen=True)
class BasisSpec:
    """Regression basis g(x) = (1, x_1, ..., x_d)."""

    kind: str = "constant_linear"

    def __post_init__(self):
        if self.kind != "constant_linear":
            raise ValueError(f"unsupported basis {self.kind!r}")

    def size(self, d: int) -> int:
        return d + 1


def basis_matrix(basis: BasisSpec, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return np.hstack([np.ones((X.shape[0], 1)), X])


class _Factors(NamedTuple):
    chol: np.ndarray  # lower factor of R + jitter*I
    logdet_R: float
    white_G: np.ndarray  # L^-1 G
    qr_r: np.ndarray  # upper-triangular factor of L^-1 G
    logdet_GRG: float
    beta: np.ndarray
    white_resid: np.ndarray  # L^-1 (y - G beta)
    quad: float  # (y - G beta)^T R^-1 (y - G beta)


def _check_data(X, y):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] != y.shape[0]:
        raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]} values")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("training data must be finite")
    q = X.shape[1] + 1
    if X.shape[0] <= q:
        raise ValueError(f"need more than q={q} training runs, got n={X.shape[0]}")
    return X, y


def _factorize(X, y, G, spec: KernelSpec) -> _Factors:
    R = gram(spec, X)
    R[np.diag_indices_from(R)] += JITTER
    L, _ = cho_factor(R, lower=True, check_finite=False)
    L = np.tril(L)
    diag = np.diag(L)
    logdet_R = 2.0 * float(np.sum(np.log(diag)))

    white_G = solve_triangular(L, G, lower=True, check_finite=False)
    white_y = solve_triangular(L, y, lower=True, check_finite=False)
    Q, Rq = np.linalg.qr(white_G)
    rdiag = np.abs(np.diag(Rq))
    tol = max(G.shape) * np.finfo(float).eps * 1e3 * rdiag.max()
    rank = int(np.sum(rdiag > tol))
    if rank < G.shape[1]:
        raise RankDeficiencyError(
            f"G^T R^-1 G is rank deficient (rank {rank} < q={G.shape[1]}); "
            "check for constant input columns or duplicated design rows"
        )
    beta = solve_triangular(Rq, Q.T @ white_y, lower=False, check_finite=False)
    white_resid = white_y - white_G @ beta
    return _Factors(
        chol=L,
        logdet_R=logdet_R,
        white_G=white_G,
        qr_r=Rq,
        logdet_GRG=2.0 * float(np.sum(np.log(rdiag))),
        beta=beta,
        white_resid=white_resid,
        quad=float(white_resid @ white_resid),
    )


def gls_estimates(X, y, basis: BasisSpec, spec: KernelSpec):
    """Return ``(beta_hat, sigma2_mle, sigma2_reml)`` for fixed lengthscales."""
    X, y = _check_data(X, y)
    G = basis_matrix(basis, X)
    f = _factorize(X, y, G, spec)
    n, q = G.shape
    s2_mle = f.quad / n
    return f.beta, s2_mle, s2_mle * n / (n - q)


def _objective_from_factors(f: _Factors, n: int, q: int, method: Method) -> float:
    if method is Method.MLE:
        s2 = max(f.quad / n, SIGMA2_FLOOR)
        return n * np.log(s2) + f.logdet_R
    s2 = max(f.quad / (n - q), SIGMA2_FLOOR)
    return (n - q) * np.log(s2) + f.logdet_R + f.logdet_GRG


def neg_objective(X, y, basis: BasisSpec, family, lengthscales, method="reml") -> float:
    """Profile objective in the lengthscales (smaller is better)."""
    X, y = _check_data(X, y)
    spec = KernelSpec(Family.parse(family), tuple(np.atleast_1d(lengthscales)))
    G = basis_matrix(basis, X)
    f = _factorize(X, y, G, spec)
    return float(_objective_from_factors(f, G.shape[0], G.shape[1], Method.parse(method)))


@dataclass(frozen=True, eq=False)
class GpModel:
    X: np.ndarray
    y: np.ndarray
    basis: BasisSpec
    kernel: KernelSpec
    beta_hat: np.ndarray
    sigma2_hat: float
    method: Method
    chol_R: np.ndarray
    alpha: np.ndarray  # R^-1 (y - G beta)
    grg_inv: np.ndarray  # (G^T R^-1 G)^-1
    sigma2_mle: float
    sigma2_reml: float
    objective: float
    degenerate: bool = False
    _qr_r: np.ndarray = field(default=None, repr=False)
    _white_G: np.ndarray = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def predict(self, Xstar):
        """Posterior mean and variance at the rows of ``Xstar``."""
        Xstar = np.atleast_2d(np.asarray(Xstar, dtype=float))
        if Xstar.shape[1] != self.dim:
            raise ValueError(f"expected {self.dim} input columns, got {Xstar.shape[1]}")
        r = cross_corr(self.kernel, self.X, Xstar)  # n x m
        # the jitter belongs to the zero-distance correlation, so training
        # inputs are reproduced exactly
        same = np.all(self.X[:, None, :] == Xstar[None, :, :], axis=2)
        r = r + JITTER * same
        prior = 1.0 + JITTER * same.any(axis=0)
        gstar = basis_matrix(self.basis, Xstar)  # m x q
        mean = gstar @ self.beta_hat + r.T @ self.alpha
        w = solve_triangular(self.chol_R, r, lower=True, check_finite=False)
        h = gstar.T - self._white_G.T @ w  # q x m
        u = solve_triangular(self._qr_r, h, trans="T", lower=False, check_finite=False)
        var = self.sigma2_hat * (prior - np.sum(w * w, axis=0) + np.sum(u * u, axis=0))
        return mean, np.maximum(var, 0.0)


def predict_gp(model: GpModel, xstar):
    """Mean and variance at a single input."""
    xstar = np.atleast_1d(np.asarray(xstar, dtype=float))
    if xstar.shape != (model.dim,):
        raise ValueError(f"expected a vector of length {model.dim}, got shape {xstar.shape}")
    mean, var = model.predict(xstar[None, :])
    return float(mean[0]), float(var[0])


def fit_gp(
    X,
    y,
    basis: BasisSpec | None = None,
    family="matern52",
    method="reml",
    *,
    n_starts: int = 5,
    maxiter: int = 500,
    tol: float = 1e-8,
    seed: int = 0,
) -> GpModel:
    """Fit lengthscales by minimizing the profile objective, then cache factors.

    Rows are put in lexicographic order first so that the fit does not
    depend on how the training runs are listed.
    """
    X, y = _check_data(X, y)
    basis = basis or BasisSpec()
    family = Family.parse(family)
    method = Method.parse(method)
    if len(np.unique(X, axis=0)) != X.shape[0]:
        raise ValueError("design rows must be distinct")

    order = np.lexsort(X.T[::-1])
    X, y = X[order], y[order]
    n, d = X.shape
    G = basis_matrix(basis, X)
    q = G.shape[1]

    span = X.max(axis=0) - X.min(axis=0)
    span = np.where(span > 0, span, 1.0)
    lo, hi = np.log(0.05 * span), np.log(5.0 * span)
    bounds = list(zip(np.log(1e-3 * span), np.log(1e3 * span)))

    def objective(loglam):
        try:
            spec = KernelSpec(family, tuple(np.exp(loglam)))
            val = _objective_from_factors(_factorize(X, y, G, spec), n, q, method)
        except (np.linalg.LinAlgError, ValueError):
            return np.inf
        return val if np.isfinite(val) else np.inf

    starts = lo + lhd(n_starts, d, seed).X * (hi - lo)
    best_x, best_val = None, np.inf
    for x0 in starts:
        res = minimize(
            objective,
            x0,
            method="Nelder-Mead",
            bounds=bounds,
            options={"maxiter": maxiter, "xatol": tol, "fatol": tol},
        )
        # strict comparison keeps the lowest start index on ties
        if np.isfinite(res.fun) and res.fun < best_val:
            best_x, best_val = res.x, float(res.fun)
    if best_x is None:
        raise RuntimeError("no optimizer start produced a finite objective")

    spec = KernelSpec(family, tuple(np.exp(best_x)))
    return _build_model(X, y, basis, spec, method, G, best_val)


def model_from_lengthscales(X, y, basis: BasisSpec, spec: KernelSpec, method="reml") -> GpModel:
    """Build a fitted model with the lengthscales held fixed."""
    X, y = _check_data(X, y)
    method = Method.parse(method)
    G = basis_matrix(basis, X)
    f = _factorize(X, y, G, spec)
    return _build_model(X, y, basis, spec, method, G,
                        _objective_from_factors(f, G.shape[0], G.shape[1], method))


def _build_model(X, y, basis, spec, method, G, objective) -> GpModel:
    n, q = G.shape
    f = _factorize(X, y, G, spec)
    s2_mle = f.quad / n
    s2_reml = s2_mle * n / (n - q)
    raw = s2_mle if method is Method.MLE else s2_reml
    degenerate = raw < SIGMA2_FLOOR
    if degenerate:
        logger.debug("zero residual variance; flooring sigma^2 at %g", SIGMA2_FLOOR)
    alpha = solve_triangular(f.chol, f.white_resid, trans="T", lower=True, check_finite=False)
    rinv = solve_triangular(f.qr_r, np.eye(q), lower=False, check_finite=False)
    return GpModel(
        X=X,
        y=y,
        basis=basis,
        kernel=spec,
        beta_hat=f.beta,
        sigma2_hat=max(raw, SIGMA2_FLOOR),
        method=method,
        chol_R=f.chol,
        alpha=alpha,
        grg_inv=rinv @ rinv.T,
        sigma2_mle=s2_mle,
        sigma2_reml=s2_reml,
        objective=float(objective),
        degenerate=bool(degenerate),
        _qr_r=f.qr_r,
        _white_G=f.white_G,
    )
