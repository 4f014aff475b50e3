import numpy as np
import pytest

from groundemu.classifiers import (
    ConstantClassifier,
    OracleClassifier,
    SvmFitError,
    fit_rf,
    fit_svm,
    label,
    predict_proba,
)
from groundemu.classifiers.svm import median_heuristic, platt_fit, rbf, smo
from groundemu.simulators import gamma_sim


def threshold_data(n, seed, t=0.3):
    x = np.random.default_rng(seed).random((n, 1))
    return x, (x[:, 0] > t).astype(int)


def test_label():
    assert label(0.5, 0.0) == 1
    assert label(0.0, 0.0) == 0
    assert label(-1.0, 0.0) == 0
    assert np.array_equal(label([0.1, 0.0, -0.2, 3.0], 0.0), [1, 0, 0, 1])


def test_oracle_is_exact():
    clf = OracleClassifier(lambda x: gamma_sim(x[:, 0] * 5.0), 0.0, 1)
    xs = np.array([[0.1], [0.49], [0.51], [0.9]])
    assert np.array_equal(clf.predict_proba(xs), [0.0, 0.0, 1.0, 1.0])
    assert predict_proba(clf, [0.95]) == 1.0
    with pytest.raises(ValueError):
        clf.predict_proba(np.zeros((2, 2)))


def test_rf_accuracy_and_vote_fractions():
    X, lab = threshold_data(200, 0)
    Xte, lte = threshold_data(1000, 1)
    rf = fit_rf(X, lab, ntree=100, rng=2)
    p = rf.predict_proba(Xte)
    assert np.mean((p > 0.5) == lte) >= 0.95
    # vote fractions are exact multiples of 1/ntree
    assert np.allclose(p * 100, np.round(p * 100), atol=1e-12)
    assert np.all((p >= 0) & (p <= 1))
    # deep inside a pure region every tree agrees
    assert rf.predict_proba([[0.95], [0.99]]).tolist() == [1.0, 1.0]
    assert rf.predict_proba([[0.01]]).tolist() == [0.0]


def test_rf_reproducible_and_seed_sensitive():
    rng = np.random.default_rng(3)
    X = rng.random((60, 3))
    lab = (X[:, 0] + X[:, 1] ** 2 > 0.8).astype(int)
    Xs = rng.random((50, 3))
    a = fit_rf(X, lab, ntree=40, rng=5).predict_proba(Xs)
    b = fit_rf(X, lab, ntree=40, rng=5).predict_proba(Xs)
    assert np.array_equal(a, b)


def test_rf_single_class_is_degenerate():
    X = np.random.default_rng(4).random((20, 2))
    rf = fit_rf(X, np.ones(20, dtype=int), ntree=10, rng=0)
    assert isinstance(rf, ConstantClassifier) and rf.degenerate
    assert np.all(rf.predict_proba(np.random.default_rng(5).random((7, 2))) == 1.0)


def test_rf_label_swap_symmetry():
    X, lab = threshold_data(150, 6, t=0.55)
    Xs = np.linspace(0, 1, 41)[:, None]
    p = fit_rf(X, lab, ntree=60, rng=8).predict_proba(Xs)
    q = fit_rf(X, 1 - lab, ntree=60, rng=8).predict_proba(Xs)
    # separable data: swapped forests agree away from tied votes
    assert np.max(np.abs(p - (1 - q))) <= 0.1


def test_svm_accuracy_and_probability_range():
    X, lab = threshold_data(200, 0)
    Xte, lte = threshold_data(1000, 1)
    svm = fit_svm(X, lab, rng=3)
    p = svm.predict_proba(Xte)
    assert np.mean((p > 0.5) == lte) >= 0.95
    assert np.all((p > 0) & (p < 1))
    assert np.all(np.isfinite(svm.decision_function(Xte)))


def test_svm_dual_feasibility_and_kkt():
    rng = np.random.default_rng(9)
    X = rng.random((80, 2))
    lab = (X[:, 0] + 0.3 * rng.normal(size=80) > 0.5).astype(int)
    y = np.where(lab == 1, 1.0, -1.0)
    K = rbf(X, X, median_heuristic(X, rng))
    C = 1.0
    res = smo(K, y, C)
    a = res.alpha
    assert np.all(a >= 0) and np.all(a <= C)
    assert abs(a @ y) <= 1e-6
    f = K @ (a * y) - res.rho
    margin = y * f
    tol = 1e-2
    assert np.all(margin[a <= 1e-12] >= 1 - tol)
    assert np.all(margin[a >= C - 1e-12] <= 1 + tol)
    free = (a > 1e-8) & (a < C - 1e-8)
    assert np.all(np.abs(margin[free] - 1) <= tol)


def test_svm_matches_sklearn_decision_values():
    sklearn_svm = pytest.importorskip("sklearn.svm")
    rng = np.random.default_rng(10)
    X = rng.random((60, 2))
    lab = (X[:, 1] > 0.4 + 0.2 * np.sin(6 * X[:, 0])).astype(int)
    gamma = median_heuristic(X, np.random.default_rng(0))
    ours = fit_svm(X, lab, C=1.0, rbf_width=gamma, rng=0)
    ref = sklearn_svm.SVC(C=1.0, gamma=gamma, tol=1e-3).fit(X, lab)
    Xs = rng.random((30, 2))
    assert ours.decision_function(Xs) == pytest.approx(ref.decision_function(Xs), abs=5e-3)


def test_svm_errors_on_imbalance():
    X = np.random.default_rng(11).random((20, 1))
    with pytest.raises(SvmFitError):
        fit_svm(X, np.ones(20, dtype=int))
    lab = np.zeros(20, dtype=int)
    lab[3] = 1
    with pytest.raises(SvmFitError):
        fit_svm(X, lab)


def test_platt_targets_and_monotonicity():
    dec = np.linspace(-2, 2, 40)
    lab = (dec > 0).astype(int)
    A, B = platt_fit(dec, lab)
    assert A < 0
    prob = 1 / (1 + np.exp(A * dec + B))
    assert np.all(np.diff(prob) > 0)
    # smoothed targets keep the fitted sigmoid away from 0 and 1
    assert prob[0] > 0 and prob[-1] < 1


def test_median_heuristic_hand_case():
    X = np.array([[0.0], [1.0], [3.0]])
    # squared distances 1, 9, 4 -> median 4
    assert median_heuristic(X, np.random.default_rng(0)) == pytest.approx(0.25)
