"""Separable stationary correlation functions and Gram matrices."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

JITTER = 1e-8

_SQRT3 = np.sqrt(3.0)
_SQRT5 = np.sqrt(5.0)


class Family(str, Enum):
    SQEXP = "sqexp"
    MATERN32 = "matern32"
    MATERN52 = "matern52"

    @classmethod
    def parse(cls, value: "str | Family") -> "Family":
        if isinstance(value, Family):
            return value
        key = str(value).strip().lower().replace("-", "").replace("_", "").replace("/", "")
        aliases = {
            "sqexp": cls.SQEXP,
            "gaussian": cls.SQEXP,
            "matern32": cls.MATERN32,
            "matern52": cls.MATERN52,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown kernel family {value!r}") from None


@dataclass(frozen=True)
class KernelSpec:
    """Correlation family together with one lengthscale per input dimension."""

    family: Family
    lengthscales: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "family", Family.parse(self.family))
        ls = tuple(float(v) for v in np.atleast_1d(self.lengthscales))
        if len(ls) == 0:
            raise ValueError("at least one lengthscale is required")
        if not all(np.isfinite(v) and v > 0 for v in ls):
            raise ValueError(f"lengthscales must be positive and finite, got {ls}")
        object.__setattr__(self, "lengthscales", ls)

    @property
    def dim(self) -> int:
        return len(self.lengthscales)


def corr_1d(family: Family, h, lengthscale: float):
    """Univariate correlation r(h; lambda) for nonnegative distances ``h``."""
    t = np.abs(np.asarray(h, dtype=float)) / lengthscale
    if family is Family.SQEXP:
        return np.exp(-(t * t))
    if family is Family.MATERN32:
        a = _SQRT3 * t
        return (1.0 + a) * np.exp(-a)
    if family is Family.MATERN52:
        a = _SQRT5 * t
        return (1.0 + a + a * a / 3.0) * np.exp(-a)
    raise ValueError(f"unsupported family {family!r}")


def corr(spec: KernelSpec, x, xp) -> float:
    """Product correlation between two points."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xp = np.atleast_1d(np.asarray(xp, dtype=float))
    if x.shape != (spec.dim,) or xp.shape != (spec.dim,):
        raise ValueError(
            f"expected vectors of length {spec.dim}, got {x.shape} and {xp.shape}"
        )
    out = 1.0
    for j, lam in enumerate(spec.lengthscales):
        out *= float(corr_1d(spec.family, x[j] - xp[j], lam))
    return out


def cross_corr(spec: KernelSpec, A, B) -> np.ndarray:
    """Matrix of correlations between the rows of ``A`` (m x d) and ``B`` (k x d)."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape[1] != spec.dim or B.shape[1] != spec.dim:
        raise ValueError(
            f"inputs must have {spec.dim} columns, got {A.shape[1]} and {B.shape[1]}"
        )
    K = np.ones((A.shape[0], B.shape[0]))
    for j, lam in enumerate(spec.lengthscales):
        K *= corr_1d(spec.family, A[:, j, None] - B[None, :, j], lam)
    return K


def gram(spec: KernelSpec, X) -> np.ndarray:
    """Gram matrix R_ij = r(x_i, x_j), without jitter."""
    R = cross_corr(spec, X, X)
    # exact symmetry and unit diagonal regardless of rounding in the product
    R = 0.5 * (R + R.T)
    np.fill_diagonal(R, 1.0)
    return R
