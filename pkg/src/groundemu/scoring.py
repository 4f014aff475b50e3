"""RMSE and the continuous ranked probability score.

``crps_exact`` evaluates the CRPS of the grounded lognormal mixture in
closed form. Writing z = y - g + gamma for the shifted lognormal variable
and L for its distribution function, an observation u >= g scores

    (u - g) + 2 p * int_gamma^{u-g+gamma} (L(z) - 1) dz
            + p^2 * int_gamma^inf (1 - L(z))^2 dz.

The first integral follows from integration by parts. The second is the
lognormal CRPS at gamma minus the mass of L^2 on (0, gamma); that last
piece reduces to a bivariate normal probability, evaluated through
Owen's T function. ``crps_numeric`` integrates the CRPS definition
directly and serves as an independent check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import ndtr, owens_t

from .mixture import DEGENERATE_VAR, PredictiveMixture

_INV_SQRT2 = 1.0 / np.sqrt(2.0)


@dataclass(frozen=True)
class ScoreRecord:
    index: int
    observed: float
    mean: float
    var: float
    crps: float
    squared_error: float


def rmse(predicted, observed) -> float:
    predicted = np.asarray(predicted, dtype=float).ravel()
    observed = np.asarray(observed, dtype=float).ravel()
    if predicted.size != observed.size:
        raise ValueError(f"length mismatch: {predicted.size} predictions, {observed.size} observations")
    if predicted.size == 0:
        raise ValueError("need at least one prediction")
    return float(np.sqrt(np.mean((observed - predicted) ** 2)))


def _phi_diff(a, b):
    """Phi(a) - Phi(b), taking complements in the upper tail."""
    a, b = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float))
    upper = np.minimum(a, b) > 0
    return np.where(upper, ndtr(-b) - ndtr(-a), ndtr(a) - ndtr(b))


def bivariate_normal_cdf(h, k, rho):
    """P(X <= h, Y <= k) for standard normals with correlation ``rho``, |rho| < 1."""
    h, k = np.broadcast_arrays(np.asarray(h, float), np.asarray(k, float))
    # the Owen's T representation is singular on the axes; nudge off them
    h = np.where(h == 0.0, 1e-15, h)
    k = np.where(k == 0.0, 1e-15, k)
    c = np.sqrt(1.0 - rho * rho)
    t_h = owens_t(h, (k - rho * h) / (h * c))
    t_k = owens_t(k, (h - rho * k) / (k * c))
    beta = np.where(h * k > 0, 0.0, 0.5)
    return 0.5 * (ndtr(h) + ndtr(k)) - t_h - t_k - beta


def _lognormal_crps(m, v, x):
    s = np.sqrt(v)
    w = (np.log(x) - m) / s
    return x * (2.0 * ndtr(w) - 1.0) - 2.0 * np.exp(m + v / 2.0) * (
        ndtr(w - s) + ndtr(s * _INV_SQRT2) - 1.0
    )


def crps_lognormal(m, v, x):
    """CRPS of Lognormal(meanlog=m, varlog=v) at a positive observation x."""
    m, v, x = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (m, v, x)))
    if np.any(x <= 0):
        raise ValueError("lognormal CRPS needs a positive observation")
    if np.any(v < 0):
        raise ValueError("varlog must be nonnegative")
    safe_v = np.where(v > 0, v, 1.0)
    out = np.where(v > 0, _lognormal_crps(m, safe_v, x), np.abs(x - np.exp(m)))
    out = np.maximum(out, 0.0)
    return float(out) if out.ndim == 0 else out


def _sq_cdf_below(m, v, x):
    """int_0^x L(z)^2 dz for the lognormal L."""
    s = np.sqrt(v)
    w = (np.log(x) - m) / s
    tail = bivariate_normal_cdf(w - s, s * _INV_SQRT2, -_INV_SQRT2)
    return x * ndtr(w) ** 2 - 2.0 * np.exp(m + v / 2.0) * tail


def crps_mixture(p, m, v, g, gamma, u):
    """Vectorized closed-form CRPS of the grounded mixture at observations u >= g."""
    p, m, v, g, gamma, u = np.broadcast_arrays(
        *(np.asarray(a, dtype=float) for a in (p, m, v, g, gamma, u))
    )
    if np.any(u < g):
        raise ValueError("observation below the grounding value")
    du = u - g
    zu = du + gamma
    smooth = v > DEGENERATE_VAR
    vs = np.where(smooth, v, 1.0)
    s = np.sqrt(vs)
    scale = np.exp(m + vs / 2.0)

    upper_u = ndtr(-(np.log(zu) - m) / s)  # 1 - L(u - g + gamma)
    upper_g = ndtr(-(np.log(gamma) - m) / s)  # 1 - L(gamma)
    first = (
        -upper_u * zu
        + upper_g * gamma
        - scale * _phi_diff((np.log(zu) - m - vs) / s, (np.log(gamma) - m - vs) / s)
    )
    second = _lognormal_crps(m, vs, gamma) - _sq_cdf_below(m, vs, gamma)
    smooth_val = du + 2.0 * p * first + p * p * second

    # two-atom limit: mass 1-p at g, mass p at c = g - gamma + e^m (folded onto g if c <= g)
    c = np.maximum(g - gamma + np.exp(m), g)
    below = (u - g) * (1.0 - p) ** 2 + (c - u) * p * p
    above = (c - g) * (1.0 - p) ** 2 + (u - c)
    atom_val = np.where(u <= c, below, above)

    out = np.maximum(np.where(smooth, smooth_val, atom_val), 0.0)
    return float(out) if out.ndim == 0 else out


def crps_exact(pm: PredictiveMixture, u):
    return crps_mixture(pm.p, pm.m, pm.v, pm.g, pm.gamma, u)


def crps_numeric(pm: PredictiveMixture, u, tol: float = 1e-10) -> float:
    """CRPS by adaptive quadrature of (F(y) - H(y >= u))^2 over y >= g.

    The integral is taken in s = ln(y - g + gamma), where the integrand is
    smooth apart from the jump at the observation.
    """
    p, m, v, g, gamma = (float(pm.p), float(pm.m), float(pm.v), float(pm.g), float(pm.gamma))
    u = float(u)
    if u < g:
        raise ValueError("observation below the grounding value")
    sd = np.sqrt(v)
    s_lo = np.log(gamma)
    s_u = np.log(u - g + gamma)
    degenerate = v <= DEGENERATE_VAR

    def cdf_above(s):
        if degenerate:
            return 1.0 - p + p * float(s >= m)
        return 1.0 - p + p * float(ndtr((s - m) / sd))

    def below_obs(s):
        return cdf_above(s) ** 2 * np.exp(s)

    def above_obs(s):
        return (1.0 - cdf_above(s)) ** 2 * np.exp(s)

    def integrate(f, a, b):
        if b <= a:
            return 0.0
        pts = [t for t in (m - 2 * sd, m, m + 2 * sd) if a < t < b]
        val, _ = quad(f, a, b, points=pts or None, epsabs=tol, epsrel=tol, limit=500)
        return val

    total = integrate(below_obs, s_lo, s_u)
    if p == 0.0:
        return max(total, 0.0)
    s_hi = max(m + 8.0 * max(sd, 1e-6), s_u)
    if not degenerate:
        # analytic bound on the remaining upper tail; extend until negligible
        while True:
            z = np.exp(s_hi)
            upper = float(ndtr(-(s_hi - m) / sd))
            tail_mass = np.exp(m + v / 2.0) * float(ndtr((m + v - s_hi) / sd)) - z * upper
            if p * p * upper * max(tail_mass, 0.0) < tol:
                break
            s_hi += 2.0 * sd
    total += integrate(above_obs, s_u, s_hi)
    return max(total, 0.0)
