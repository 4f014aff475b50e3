"""Synthetic test simulators that attain their minimum over a region.

The multivariate families are built from a smooth base function f on
[0, 1]^d as ``g + (max{0, (f - a) / m})^b``: the offset ``a`` sets the
grounded volume, the exponent ``b`` how abruptly the output lands (b < 1
gives an infinite slope at the grounding line), and ``m`` the maximum of
f rescales the output onto [0, 1].
"""

from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import gammainc

BASES = ("gamma", "sine_cube", "dp", "banana")
BANANA_FORMS = ("squared", "linear")


def gamma_sim(x, s: float = 2.5, alpha: float = 2.0, sigma: float = 1.0, g: float = 0.0):
    """Gamma(shape=alpha, scale=sigma) CDF of x - s plus g; equal to g for x <= s."""
    if np.any(np.asarray(alpha) <= 0) or np.any(np.asarray(sigma) <= 0):
        raise ValueError("alpha and sigma must be positive")
    x = np.asarray(x, dtype=float)
    t = np.maximum(x - s, 0.0)
    out = gammainc(alpha, t / sigma) + g
    out = np.where(x < s, g, out)
    return float(out) if out.ndim == 0 else out


def sine_cube(x, t):
    out = np.maximum(np.sin(np.asarray(x, float) ** 3 * np.asarray(t, float)) ** 2, 0.05)
    return float(out) if out.ndim == 0 else out


def _rows(x, d=None):
    x = np.asarray(x, dtype=float)
    X = np.atleast_2d(x)
    if d is not None and X.shape[1] != d:
        raise ValueError(f"expected {d} input columns, got {X.shape[1]}")
    return X, x.ndim == 1


def dp_curved(x):
    """Dette-Pepelyshev curved function of three inputs."""
    X, single = _rows(x, 3)
    x1, x2, x3 = X[:, 0], X[:, 1], X[:, 2]
    if np.any(x3 < -1):
        raise ValueError("third input must be >= -1")
    out = (
        4.0 * (x1 - 2.0 + 8.0 * x2 - 8.0 * x2 * x2) ** 2
        + (3.0 - 4.0 * x2) ** 2
        + 16.0 * np.sqrt(x3 + 1.0) * (2.0 * x3 - 1.0) ** 2
    )
    return float(out[0]) if single else out


def banana(x, form: str = "squared"):
    """Rosenbrock-type banana function for d >= 2.

    ``form="squared"`` penalizes (x_{i+1} - x_i^2)^2; ``form="linear"``
    penalizes (x_{i+1} - x_i)^2.
    """
    X, single = _rows(x)
    if X.shape[1] < 2:
        raise ValueError("banana needs at least two inputs")
    if form not in BANANA_FORMS:
        raise ValueError(f"unknown banana form {form!r}")
    lead, nxt = X[:, :-1], X[:, 1:]
    inner = lead * lead if form == "squared" else lead
    out = np.sum((1.0 - lead) ** 2 + 100.0 * (nxt - inner) ** 2, axis=1)
    return float(out[0]) if single else out


def grounded_transform(f_value, a: float, b: float, m_scale: float):
    if b <= 0 or m_scale <= 0:
        raise ValueError("b and m_scale must be positive")
    out = np.maximum(0.0, (np.asarray(f_value, float) - a) / m_scale) ** b
    return float(out) if out.ndim == 0 else out


def base_function(base: str, banana_form: str = "squared"):
    if base == "dp":
        return dp_curved
    if base == "banana":
        return lambda X: banana(X, banana_form)
    raise ValueError(f"no smooth base function for {base!r}")


def _uniform(n_mc: int, d: int, rng) -> np.ndarray:
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    return rng.random((int(n_mc), d))


def calibrate_offset(base, d: int, target_volume: float, n_mc: int = 100_000, rng=None) -> float:
    """Offset ``a`` so that P(f(U) <= a) is about ``target_volume`` for U uniform."""
    if not 0 < target_volume < 1:
        raise ValueError("target volume must lie strictly between 0 and 1")
    f = base_function(base) if isinstance(base, str) else base
    vals = np.asarray(f(_uniform(n_mc, d, rng)), dtype=float)
    return float(np.quantile(vals, target_volume))


def estimate_scale(base, d: int, n_mc: int = 100_000, rng=None) -> float:
    """Maximum of f over [0, 1]^d from uniform samples plus every corner."""
    f = base_function(base) if isinstance(base, str) else base
    best = float(np.max(f(_uniform(n_mc, d, rng))))
    if d <= 12:
        corners = np.array(list(itertools.product((0.0, 1.0), repeat=d)))
        best = max(best, float(np.max(f(corners))))
    return best


@dataclass(frozen=True)
class GroundedSimSpec:
    base: str
    d: int
    a: float = 0.0
    b: float = 1.0
    m_scale: float = 1.0
    g: float = 0.0
    banana_form: str = "squared"
    # Gamma-CDF family only
    s: float = 2.5
    alpha: float = 2.0
    sigma: float = 1.0

    def __post_init__(self):
        if self.base not in BASES:
            raise ValueError(f"unknown simulator base {self.base!r}; expected one of {BASES}")
        if self.b <= 0 or self.m_scale <= 0:
            raise ValueError("b and m_scale must be positive")
        if self.base == "banana" and self.d < 2:
            raise ValueError("banana needs d >= 2")
        fixed = {"gamma": 1, "sine_cube": 2, "dp": 3}
        if self.base in fixed and self.d != fixed[self.base]:
            raise ValueError(f"{self.base} takes d={fixed[self.base]}, got d={self.d}")
        if self.banana_form not in BANANA_FORMS:
            raise ValueError(f"unknown banana form {self.banana_form!r}")

    @property
    def grounding_value(self) -> float:
        return 0.05 if self.base == "sine_cube" else self.g

    def __call__(self, X):
        X, single = _rows(X, self.d)
        if self.base == "gamma":
            out = gamma_sim(X[:, 0], self.s, self.alpha, self.sigma, self.g)
        elif self.base == "sine_cube":
            out = sine_cube(X[:, 0], X[:, 1])
        else:
            f = base_function(self.base, self.banana_form)(X)
            out = self.g + grounded_transform(f, self.a, self.b, self.m_scale)
        out = np.asarray(out, dtype=float)
        return float(out[0]) if single else out

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "GroundedSimSpec":
        return cls(**data)


def make_grounded(base: str, d: int, grounded_volume: float, b: float, g: float = 0.0,
                  n_mc: int = 100_000, rng=None, banana_form: str = "squared") -> GroundedSimSpec:
    """Calibrate offset and scale so that about ``grounded_volume`` of the cube is grounded."""
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    f = base_function(base, banana_form)
    m_scale = estimate_scale(f, d, n_mc, rng)
    a = calibrate_offset(f, d, grounded_volume, n_mc, rng)
    return GroundedSimSpec(base=base, d=d, a=a, b=b, m_scale=m_scale, g=g, banana_form=banana_form)
