"""Scikit-learn style front end: all estimates for one training set."""

import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, clone
from sklearn.utils.validation import check_is_fitted

from ._validation import check_positive_int, check_random_state
from .auc_estimators import estimate_aucs
from .bootstrap import ReplicateFits
from .discriminant import LinearDiscriminant
from .error_estimators import estimate_errors
from .resampling import LabeledDataset
from .uncertainty import if_variance_loob_error, if_variance_lpob

REPORT_COLUMNS = ("family", "estimator", "estimate", "se")


@dataclass
class EstimateReport:
    """Estimator name to point estimate, with a standard error where one exists.

    Only the smooth estimators (LOOB for error, LPOB for AUC) carry an
    influence-function standard error; the others report ``None``.
    """

    error: dict = field(default_factory=dict)
    auc: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    def rows(self):
        out = []
        for family, entries in (("error", self.error), ("auc", self.auc)):
            for name, (value, se) in entries.items():
                out.append([family, name, float(value), "" if se is None else float(se)])
        return out


class BootstrapPerformance(BaseEstimator):
    """Bootstrap estimates of a classifier's error rate and AUC.

    Parameters
    ----------
    estimator : estimator, default=None
        Unfitted scoring rule; ``LinearDiscriminant()`` when None.
    n_bootstrap : int, default=100
        Number of stratified replicates shared by all estimators.
    threshold : float, default=0.0
        Scores above this call class 1 for the error-rate estimators.
    loocv : bool, default=True
        Also compute leave-one-out cross-validation.
    random_state : int, Generator or None

    Attributes
    ----------
    errors_ : ErrEstimateBundle
    aucs_ : AucEstimateBundle
    loob_se_, lpob_se_ : float
        Influence-function standard errors of LOOB and LPOB.
    fits_ : ReplicateFits
    """

    def __init__(self, estimator=None, n_bootstrap=100, threshold=0.0, loocv=True,
                 random_state=None):
        self.estimator = estimator
        self.n_bootstrap = n_bootstrap
        self.threshold = threshold
        self.loocv = loocv
        self.random_state = random_state

    def fit(self, X, y):
        data = LabeledDataset(X, y)
        trainer = LinearDiscriminant() if self.estimator is None else self.estimator
        B = check_positive_int(self.n_bootstrap, "n_bootstrap")
        rng = check_random_state(self.random_state)
        self.fits_ = ReplicateFits.draw(data, trainer, B, rng)
        self.model_ = clone(trainer).fit(data.X, data.y)
        self.errors_ = estimate_errors(data, trainer, threshold=self.threshold, fits=self.fits_,
                                       model=self.model_, loocv=self.loocv)
        self.aucs_ = estimate_aucs(data, trainer, fits=self.fits_, model=self.model_)
        self.loob_se_ = math.sqrt(if_variance_loob_error(fits=self.fits_, threshold=self.threshold))
        self.lpob_se_ = math.sqrt(if_variance_lpob(self.fits_))
        return self

    def report(self):
        check_is_fitted(self, "errors_")
        err = {k: (v, self.loob_se_ if k == "loob" else None)
               for k, v in self.errors_.as_dict().items()}
        err["gamma_hat"] = (self.errors_.gamma_hat, None)
        err["r_hat_prime"] = (self.errors_.r_hat_prime, None)
        auc = {k: (v, self.lpob_se_ if k == "lpob_auc" else None)
               for k, v in self.aucs_.as_dict().items()}
        auc["r_hat_prime"] = (self.aucs_.r_hat_prime, None)
        diagnostics = {**self.errors_.diagnostics, **self.aucs_.diagnostics,
                       "supplementary_replicates": self.fits_.n_supplements,
                       "B": self.fits_.B}
        return EstimateReport(err, auc, diagnostics)

    def score(self, X=None, y=None):
        """LPOB AUC of the fitted data (the smooth AUC estimate)."""
        check_is_fitted(self, "aucs_")
        return float(self.aucs_.lpob_auc)


def finite_report(report):
    """True when every point estimate in ``report`` is finite."""
    return all(np.isfinite(v) for v, _ in [*report.error.values(), *report.auc.values()])
