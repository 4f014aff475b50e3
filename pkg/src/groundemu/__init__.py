"""Emulators for simulators that ground at a known minimum."""

from .classifiers import OracleClassifier, fit_rf, fit_svm, label, predict_proba
from .design import Design, lhd, maximin_lhd, maximin_select, min_pairwise_dist
from .gpe import BasisSpec, GpModel, Method, basis_matrix, fit_gp, gls_estimates, neg_objective, predict_gp
from .kernels import Family, KernelSpec, corr, gram
from .mixture import (
    DoubleEmulator,
    LogGpe,
    PredictiveMixture,
    fit_double,
    fit_log_gpe,
    mixture_cdf,
    mixture_mean,
    mixture_var,
    predict_mixture,
    sample_mixture,
)
from .scoring import crps_exact, crps_lognormal, crps_numeric, rmse
from .simulators import GroundedSimSpec, make_grounded

__version__ = "0.1.0"
