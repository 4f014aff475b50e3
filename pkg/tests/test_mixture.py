import numpy as np
import pytest
from scipy.stats import lognorm

from groundemu.classifiers import ConstantClassifier, OracleClassifier, RandomForestModel
from groundemu.mixture import (
    DoubleEmulator,
    PredictiveMixture,
    fit_double,
    fit_log_gpe,
    mixture_cdf,
    mixture_mean,
    mixture_var,
    predict_mixture,
    sample_mixture,
)
from groundemu.simulators import gamma_sim, make_grounded

from oracles import mixture_raw_moment


def test_moment_hand_cases():
    pm = PredictiveMixture(0.0, 0.3, 0.2, 1.5, 1e-6)
    assert mixture_mean(pm) == 1.5 and mixture_var(pm) == 0.0
    pm = PredictiveMixture(1.0, 0.0, 0.0, 0.4, 0.4)
    assert mixture_mean(pm) == pytest.approx(1.0, abs=1e-15)
    assert mixture_var(pm) == 0.0
    pm = PredictiveMixture(0.5, 0.0, 1e-14, 0.0, 1e-300)
    assert mixture_mean(pm) == pytest.approx(0.5, abs=1e-12)
    assert mixture_var(pm) == pytest.approx(0.25, abs=1e-12)


def test_moments_match_raw_moment_oracle():
    rng = np.random.default_rng(0)
    for _ in range(50):
        p, m, v, g = rng.random(), rng.uniform(-2, 2), rng.uniform(0.01, 2), rng.uniform(-1, 1)
        gamma = 10 ** rng.uniform(-8, -2)
        pm = PredictiveMixture(p, m, v, g, gamma)
        e1 = mixture_raw_moment(p, m, v, g, gamma, 1)
        e2 = mixture_raw_moment(p, m, v, g, gamma, 2)
        assert mixture_mean(pm) == pytest.approx(e1, rel=1e-12, abs=1e-12)
        assert mixture_var(pm) == pytest.approx(e2 - e1 ** 2, rel=1e-8, abs=1e-10)


def test_var_zero_iff_degenerate():
    assert mixture_var(PredictiveMixture(0.0, 1.0, 1.0, 0.0, 1e-6)) == 0.0
    assert mixture_var(PredictiveMixture(1.0, 1.0, 0.0, 0.0, 1e-6)) == 0.0
    assert mixture_var(PredictiveMixture(1.0, 1.0, 0.1, 0.0, 1e-6)) > 0
    assert mixture_var(PredictiveMixture(0.3, 1.0, 0.0, 0.0, 1e-6)) > 0


def test_cdf_branches():
    pm = PredictiveMixture(0.7, 0.2, 0.5, 1.0, 1e-3)
    assert mixture_cdf(pm, 0.0) == 0.0
    assert mixture_cdf(pm, 1.0) == pytest.approx(0.3, abs=1e-15)
    y = 2.3
    want = 0.3 + 0.7 * lognorm(s=np.sqrt(0.5), scale=np.exp(0.2)).cdf(y - 1.0 + 1e-3)
    assert mixture_cdf(pm, y) == pytest.approx(want, rel=1e-12)
    assert mixture_cdf(pm, 1e9) == pytest.approx(1.0)
    # lognormal median
    med = PredictiveMixture(1.0, 0.2, 0.5, 1.0, 1e-3)
    assert mixture_cdf(med, 1.0 - 1e-3 + np.exp(0.2)) == pytest.approx(0.5, abs=1e-14)


def test_cdf_monotone_and_jump():
    pm = PredictiveMixture(0.6, -1.0, 2.0, 0.0, 1e-2)
    ys = np.concatenate([[-1.0, 0.0], np.geomspace(1e-12, 50, 400)])
    F = mixture_cdf(pm, ys)
    assert np.all(np.diff(F) >= 0)
    # just above g the cdf is 1 - p + p * L(gamma)
    sliver = 0.6 * lognorm(s=np.sqrt(2.0), scale=np.exp(-1.0)).cdf(1e-2)
    assert mixture_cdf(pm, 1e-13) == pytest.approx(0.4 + sliver, rel=1e-9)


def test_sampling_edge_cases():
    rng = np.random.default_rng(1)
    assert np.all(sample_mixture(PredictiveMixture(0.0, 0.0, 1.0, 2.0, 1e-6), rng, 100) == 2.0)
    s = sample_mixture(PredictiveMixture(1.0, 0.5, 0.0, 2.0, 1e-6), rng, 50)
    assert np.all(s == 2.0 - 1e-6 + np.exp(0.5))
    s = sample_mixture(PredictiveMixture(0.5, -3.0, 3.0, 0.0, 1e-2), rng, 10_000)
    assert np.all(s >= -1e-2)


@pytest.mark.slow
def test_sampling_matches_moments_example():
    pm = PredictiveMixture(0.7, 0.2, 0.5, 0.0, 1e-6)
    s = sample_mixture(pm, np.random.default_rng(2), 1_000_000)
    mu, var = mixture_mean(pm), mixture_var(pm)
    e4 = sum(mixture_raw_moment(0.7, 0.2, 0.5, 0.0, 1e-6, k) * c
             for k, c in zip(range(5), [mu ** 4, -4 * mu ** 3, 6 * mu ** 2, -4 * mu, 1]))
    assert abs(s.mean() - mu) <= 3 * np.sqrt(var / s.size)
    assert abs(s.var() - var) <= 3 * np.sqrt((e4 - var ** 2) / s.size)


def test_mixture_validation_and_indexing():
    with pytest.raises(ValueError):
        PredictiveMixture(1.2, 0.0, 1.0, 0.0, 1e-6)
    with pytest.raises(ValueError):
        PredictiveMixture(0.5, 0.0, -1.0, 0.0, 1e-6)
    with pytest.raises(ValueError):
        PredictiveMixture(0.5, 0.0, 1.0, 0.0, 0.0)
    pm = PredictiveMixture(np.array([0.1, 0.9]), np.array([0.0, 1.0]), np.array([0.5, 0.2]), 0.0, 1e-6)
    assert len(pm) == 2
    assert pm[1].m == 1.0 and pm[1].p == 0.9


def _gamma_data(n=30, seed=0):
    X = np.sort(np.random.default_rng(seed).random(n))[:, None]
    return X, gamma_sim(5.0 * X[:, 0])


def oracle_sim(X):
    return gamma_sim(5.0 * np.asarray(X)[:, 0])


def test_oracle_split_and_interpolation():
    X, y = _gamma_data()
    de = fit_double(X, y, 0.0, classifier_kind="oracle", oracle=oracle_sim)
    assert isinstance(de.classifier, OracleClassifier)
    up = np.flatnonzero(y > 0)
    assert de.gp.n == up.size
    i = up[3]
    pm = predict_mixture(de, X[i])
    assert pm.p == 1.0
    assert pm.m == pytest.approx(np.log(y[i] + 1e-6), abs=1e-9)
    assert pm.v <= 1e-9
    assert predict_mixture(de, [0.05]).p == 0.0
    with pytest.raises(ValueError):
        predict_mixture(de, [0.1, 0.2])


def test_rf_probability_passthrough():
    X, y = _gamma_data(40, 1)
    de = fit_double(X, y, 0.0, classifier_kind="rf", rng=3, ntree=50)
    assert isinstance(de.classifier, RandomForestModel)
    xs = np.array([[0.48], [0.5], [0.52]])
    assert np.array_equal(de.predict(xs).p, de.classifier.predict_proba(xs))


def test_all_above_ground_reduces_to_log_gpe():
    rng = np.random.default_rng(4)
    X = rng.random((15, 1))
    y = np.exp(np.sin(4 * X[:, 0]))
    de = fit_double(X, y, 0.0, classifier_kind="rf", rng=5, ntree=20)
    assert isinstance(de.classifier, ConstantClassifier)
    base = fit_log_gpe(X, y, 0.0)
    xs = rng.random((9, 1))
    a, b = de.predict(xs), base.predict(xs)
    assert np.all(a.p == 1.0)
    assert mixture_mean(a) == pytest.approx(mixture_mean(b), rel=1e-12)
    assert mixture_var(a) == pytest.approx(mixture_var(b), rel=1e-12)
    # p = 1 moments are the back-transformed lognormal ones
    m, v = base.gp.predict(xs)
    assert mixture_mean(b) == pytest.approx(np.exp(m + v / 2) - 1e-6, rel=1e-12)


def test_fit_errors():
    X, y = _gamma_data()
    with pytest.raises(ValueError, match="below the grounding"):
        fit_double(X, y - 1e-3, 0.0, classifier_kind="oracle", oracle=oracle_sim)
    with pytest.raises(ValueError, match="only 3 runs"):
        fit_double(X[:8], np.r_[np.zeros(5), 1.0, 2.0, 3.0], 0.0, classifier_kind="rf")
    with pytest.raises(ValueError, match="oracle"):
        fit_double(X, y, 0.0, classifier_kind="oracle")
    with pytest.raises(ValueError, match="unknown classifier"):
        fit_double(X, y, 0.0, classifier_kind="knn")


def test_banana_fit_uses_about_half_the_runs():
    rng = np.random.default_rng(6)
    sim = make_grounded("banana", 2, 0.5, 0.5, n_mc=100_000, rng=rng)
    X = rng.random((200, 2))
    y = sim(X)
    de = fit_double(X, y, 0.0, classifier_kind="oracle", oracle=sim)
    assert isinstance(de, DoubleEmulator)
    assert 70 <= de.gp.n <= 130
