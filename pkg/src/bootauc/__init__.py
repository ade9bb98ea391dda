"""Nonparametric resampling estimators of classifier error rate and AUC."""

__version__ = "0.1.0"

from ._validation import InvalidInputError, UndefinedEstimateError
from .auc_estimators import AucEstimateBundle, estimate_aucs
from .bootstrap import ReplicateFits
from .discriminant import LinearDiscriminant, QuadraticDiscriminant, make_classifier
from .error_estimators import ErrEstimateBundle, estimate_errors
from .estimator import BootstrapPerformance, EstimateReport
from .metrics import ScoreSet, auc_mann_whitney, auc_trapezoid, empirical_roc, error_rate
from .resampling import LabeledDataset
from .simulation import ExperimentConfig, compare_classifiers, run_mc_experiment

__all__ = [
    "AucEstimateBundle", "BootstrapPerformance", "ErrEstimateBundle", "EstimateReport",
    "ExperimentConfig", "InvalidInputError", "LabeledDataset", "LinearDiscriminant",
    "QuadraticDiscriminant", "ReplicateFits", "ScoreSet", "UndefinedEstimateError",
    "auc_mann_whitney", "auc_trapezoid", "compare_classifiers", "empirical_roc", "error_rate",
    "estimate_aucs", "estimate_errors", "make_classifier", "run_mc_experiment",
]
