"""Probabilistic classifiers for P(output > g)."""

from .base import ConstantClassifier, OracleClassifier, ProbClassifier, label, predict_proba
from .forest import RandomForestModel, fit_rf
from .svm import SvmFitError, SvmModel, fit_svm

__all__ = [
    "ConstantClassifier",
    "OracleClassifier",
    "ProbClassifier",
    "RandomForestModel",
    "SvmFitError",
    "SvmModel",
    "fit_rf",
    "fit_svm",
    "label",
    "predict_proba",
]
