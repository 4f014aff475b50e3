import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import multivariate_normal

from groundemu.mixture import PredictiveMixture
from groundemu.scoring import (
    bivariate_normal_cdf,
    crps_exact,
    crps_lognormal,
    crps_mixture,
    crps_numeric,
    rmse,
)

from oracles import lognormal_crps_quad


def test_rmse():
    assert rmse([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert rmse([0.0, 0.0], [3.0, 4.0]) == pytest.approx(3.5355339059327378, abs=1e-15)
    assert rmse([5.0], [7.0]) == 2.0
    with pytest.raises(ValueError):
        rmse([1.0, 2.0], [1.0])


def test_bivariate_normal_matches_scipy():
    rng = np.random.default_rng(0)
    for _ in range(20):
        h, k = rng.normal(size=2) * 2
        rho = rng.uniform(-0.95, 0.95)
        ref = multivariate_normal(cov=[[1, rho], [rho, 1]]).cdf([h, k])
        assert bivariate_normal_cdf(h, k, rho) == pytest.approx(ref, abs=1e-6)
    # axes and the origin
    assert bivariate_normal_cdf(0.0, 0.0, -1 / np.sqrt(2)) == pytest.approx(
        0.25 + np.arcsin(-1 / np.sqrt(2)) / (2 * np.pi), abs=1e-12)


def test_lognormal_crps_against_quadrature():
    rng = np.random.default_rng(1)
    for _ in range(20):
        m, v, x = rng.uniform(-2, 2), rng.uniform(0.01, 4), np.exp(rng.uniform(-3, 3))
        assert crps_lognormal(m, v, x) == pytest.approx(lognormal_crps_quad(m, v, x), abs=1e-7)


def test_lognormal_crps_limits_and_errors():
    assert crps_lognormal(0.4, 1e-14, np.exp(0.4)) == pytest.approx(0.0, abs=1e-6)
    assert crps_lognormal(0.4, 0.0, 2.0) == pytest.approx(abs(2.0 - np.exp(0.4)))
    with pytest.raises(ValueError):
        crps_lognormal(0.0, 1.0, 0.0)


@settings(max_examples=100, deadline=None)
@given(st.floats(-2, 2), st.floats(0.01, 4), st.floats(-3, 3), st.floats(-2, 2))
def test_lognormal_crps_scale_equivariance(m, v, logx, logc):
    x, c = np.exp(logx), np.exp(logc)
    assert crps_lognormal(m + logc, v, c * x) == pytest.approx(c * crps_lognormal(m, v, x), rel=1e-10, abs=1e-14)


def test_mixture_crps_hand_cases():
    pm = PredictiveMixture(0.0, 0.3, 1.0, 0.5, 1e-6)
    assert crps_exact(pm, 0.8) == pytest.approx(0.3, abs=1e-15)
    # at u = g only the lognormal-tail term survives
    pm = PredictiveMixture(0.6, -0.5, 0.8, 0.2, 1e-3)
    expect = 0.36 * crps_numeric(PredictiveMixture(1.0, -0.5, 0.8, 0.2, 1e-3), 0.2)
    assert crps_exact(pm, 0.2) == pytest.approx(expect, abs=1e-9)
    with pytest.raises(ValueError):
        crps_exact(pm, 0.1)


def test_mixture_crps_known_defect_case():
    # heavy lognormal mass below gamma; the L^2 mass on (0, gamma) matters here
    pm = PredictiveMixture(1.0, -2.0, 4.0, 0.0, 1e-2)
    for u in (0.0, 0.05, 1.0):
        assert crps_exact(pm, u) == pytest.approx(crps_numeric(pm, u), abs=1e-9)


def test_two_atom_limit():
    # mass 0.4 at g=0 and 0.6 at e^0 - 1e-6
    pm = PredictiveMixture(0.6, 0.0, 0.0, 0.0, 1e-6)
    c = 1.0 - 1e-6
    assert crps_exact(pm, 0.5) == pytest.approx(0.5 * 0.16 + (c - 0.5) * 0.36, abs=1e-14)
    assert crps_exact(pm, 2.0) == pytest.approx(c * 0.16 + (2.0 - c), abs=1e-14)
    # near-degenerate smooth case approaches the atom
    near = PredictiveMixture(0.6, 0.0, 1e-10, 0.0, 1e-6)
    assert crps_exact(near, 0.5) == pytest.approx(crps_exact(pm, 0.5), abs=1e-4)


def test_crps_nonnegative_and_continuous():
    rng = np.random.default_rng(2)
    for _ in range(30):
        pm = PredictiveMixture(rng.random(), rng.uniform(-2, 2), rng.uniform(0.01, 4),
                               rng.uniform(-1, 1), 10 ** rng.uniform(-8, -2))
        u = pm.g + rng.uniform(0, 10)
        a = crps_exact(pm, u)
        assert a >= 0
        assert abs(crps_exact(pm, u + 1e-7) - a) <= 1e-6


def test_vectorized_matches_scalar():
    rng = np.random.default_rng(3)
    n = 25
    p, m, v = rng.random(n), rng.uniform(-2, 2, n), rng.uniform(0.01, 3, n)
    u = rng.uniform(0, 5, n)
    vec = crps_mixture(p, m, v, 0.0, 1e-6, u)
    for i in range(n):
        assert vec[i] == crps_exact(PredictiveMixture(p[i], m[i], v[i], 0.0, 1e-6), u[i])


def test_exact_matches_numeric_random():
    rng = np.random.default_rng(4)
    for _ in range(100):
        pm = PredictiveMixture(rng.random(), rng.uniform(-2, 2), rng.uniform(1e-3, 4),
                               rng.uniform(-1, 1), 10 ** rng.uniform(-8, -2))
        u = pm.g + rng.uniform(0, 10)
        assert crps_exact(pm, u) == pytest.approx(crps_numeric(pm, u), abs=1e-6)
