"""Resampling estimators of a classifier's 0-1 error rate.

Apparent error, leave-one-out and k-fold CV, and the bootstrap family: simple
bootstrap (SB), leave-one-out bootstrap (LOOB), the replicate-major
``Err*``, the refined bootstrap, .632 and .632+.  A case is called class 1
when its score is strictly above ``threshold``.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import clone

from ._validation import CLASS_1, InvalidInputError, UndefinedEstimateError
from .bootstrap import ReplicateFits, identity_replicates
from .metrics import CostModel, ScoreSet, error_rate, misclassified
from .resampling import cv_folds

W_APPARENT = 0.368
W_OUT = 0.632


@dataclass
class ErrEstimateBundle:
    """All error-rate estimates computed from one shared replicate set."""

    apparent: float
    loocv: float
    simple_boot: float
    loob: float
    err_star: float
    refined: float
    dot632: float
    dot632plus: float
    gamma_hat: float
    r_hat_prime: float
    B: int
    diagnostics: dict = field(default_factory=dict)

    ESTIMATORS = ("apparent", "loocv", "simple_boot", "loob", "err_star",
                  "refined", "dot632", "dot632plus")

    def as_dict(self):
        return {name: getattr(self, name) for name in self.ESTIMATORS}


def apparent_error(model, data, threshold=0.0, costs=None):
    """Error of ``model`` on its own training data."""
    s = ScoreSet.from_labels(model.decision_function(data.X), data.y)
    return error_rate(s, threshold, costs)


def _cv_losses(data, trainer, folds, threshold):
    losses = np.full(data.n, np.nan)
    skipped = []
    for test in folds:
        train = np.setdiff1d(np.arange(data.n), test)
        try:
            model = clone(trainer).fit(data.X[train], data.y[train])
        except (InvalidInputError, np.linalg.LinAlgError):
            skipped.extend(test.tolist())
            continue
        losses[test] = misclassified(model.decision_function(data.X[test]), data.y[test], threshold)
    return losses, skipped


def _mean_or_nan(losses, skipped, label):
    if skipped:
        warnings.warn(
            f"{label}: {len(skipped)} case(s) skipped because the reduced training "
            f"set could not be fitted (cases {skipped[:10]})",
            RuntimeWarning,
            stacklevel=3,
        )
    kept = losses[~np.isnan(losses)]
    return float(kept.mean()) if kept.size else float("nan")


def loocv_losses(data, trainer, threshold=0.0):
    """Per-case leave-one-out losses (NaN where the reduced set is untrainable)."""
    return _cv_losses(data, trainer, [np.array([i]) for i in range(data.n)], threshold)


def loocv_error(data, trainer, threshold=0.0):
    """Leave-one-out cross-validation error.

    Cases whose removal leaves an untrainable set are skipped with a
    ``RuntimeWarning`` naming them.
    """
    losses, skipped = loocv_losses(data, trainer, threshold)
    return _mean_or_nan(losses, skipped, "loocv_error")


def kfold_cv_error(data, trainer, k, random_state=None, threshold=0.0):
    """Stratified k-fold cross-validation error."""
    plan = cv_folds(data, k, random_state)
    losses, skipped = _cv_losses(data, trainer, plan.folds(), threshold)
    return _mean_or_nan(losses, skipped, "kfold_cv_error")


def replicate_losses(fits, threshold=0.0):
    """``(B, n)`` 0-1 losses of each replicate model on each original case."""
    return misclassified(fits.scores, fits.data.y, threshold)


def simple_bootstrap_from_fits(fits, threshold=0.0):
    return float(replicate_losses(fits, threshold).mean())


def loob_case_errors(fits, threshold=0.0):
    """Per-case average loss over replicates that leave the case out.

    A case left out by no replicate gets a supplementary replicate drawn
    conditionally on excluding it.  Returns ``(E, uncovered)``.
    """
    L = replicate_losses(fits, threshold)
    excl = fits.excluded
    cover = excl.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        E = (excl * L).sum(axis=0) / cover
    uncovered = np.flatnonzero(cover == 0)
    for i in uncovered:
        _, s = fits.conditioned([i])
        E[i] = misclassified(s[i], fits.data.y[i], threshold)
    return E, uncovered


def loob_from_fits(fits, threshold=0.0):
    E, _ = loob_case_errors(fits, threshold)
    return float(E.mean())


def err_star_from_fits(fits, threshold=0.0):
    """Mean over replicates of the loss on each replicate's left-out cases.

    Replicates that leave nothing out are dropped.  Returns ``(value, dropped)``.
    """
    L = replicate_losses(fits, threshold)
    excl = fits.excluded
    n_out = excl.sum(axis=1)
    keep = n_out > 0
    if not keep.any():
        raise UndefinedEstimateError("every replicate contains every case; Err* is undefined")
    per_rep = (excl[keep] * L[keep]).sum(axis=1) / n_out[keep]
    return float(per_rep.mean()), int((~keep).sum())


def refined_from_fits(fits, apparent, threshold=0.0):
    """Apparent error plus the bootstrap estimate of the optimism."""
    L = replicate_losses(fits, threshold)
    on_data = L.mean(axis=1)
    on_replicate = (fits.counts * L).sum(axis=1) / fits.data.n
    return float(apparent + np.mean(on_data - on_replicate))


def _fits(data, trainer, B, random_state):
    return ReplicateFits.draw(data, trainer, B, random_state)


def simple_bootstrap_error(data, trainer, B=100, random_state=None, threshold=0.0):
    """Average error of replicate-trained models on the full data."""
    return simple_bootstrap_from_fits(_fits(data, trainer, B, random_state), threshold)


def loob_error(data, trainer, B=100, random_state=None, threshold=0.0):
    """Leave-one-out bootstrap error: each case tested only by replicates without it."""
    return loob_from_fits(_fits(data, trainer, B, random_state), threshold)


def err_star(data, trainer, B=100, random_state=None, threshold=0.0):
    """Replicate-major out-of-replicate error."""
    return err_star_from_fits(_fits(data, trainer, B, random_state), threshold)[0]


def refined_bootstrap_error(data, trainer, B=100, random_state=None, threshold=0.0):
    model = clone(trainer).fit(data.X, data.y)
    apparent = apparent_error(model, data, threshold)
    return refined_from_fits(_fits(data, trainer, B, random_state), apparent, threshold)


def gamma_hat(model, data, threshold=0.0):
    """No-information error rate ``p1 (1 - q1) + (1 - p1) q1``.

    ``p1`` is the share of class-1 labels, ``q1`` the share of cases the model
    calls class 1.
    """
    p1 = float(np.mean(data.y == CLASS_1))
    q1 = float(np.mean(model.decision_function(data.X) > threshold))
    return p1 * (1.0 - q1) + (1.0 - p1) * q1


def dot632_error(apparent, loob):
    return W_APPARENT * apparent + W_OUT * loob


def relative_overfitting_rate(apparent, loob, gamma):
    """Clamped relative overfitting rate in [0, 1].

    Uses ``min(loob, gamma)`` and is 0 unless that exceeds the apparent error.
    """
    loob_c = min(loob, gamma)
    if loob_c > apparent:
        return (loob_c - apparent) / (gamma - apparent)
    return 0.0


def dot632plus_error(apparent, loob, gamma):
    """.632 estimate plus the no-information correction."""
    r = relative_overfitting_rate(apparent, loob, gamma)
    loob_c = min(loob, gamma)
    correction = (loob_c - apparent) * (W_APPARENT * W_OUT * r) / (1.0 - W_APPARENT * r)
    return dot632_error(apparent, loob) + correction


def estimate_errors(data, trainer, B=100, random_state=None, threshold=0.0,
                    loocv=True, fits=None, model=None):
    """Every error estimator on one shared set of ``B`` replicates."""
    if fits is None:
        fits = _fits(data, trainer, B, random_state)
    if model is None:
        model = clone(trainer).fit(data.X, data.y)
    diagnostics = {}
    apparent = apparent_error(model, data, threshold)
    if loocv:
        losses, skipped = loocv_losses(data, trainer, threshold)
        loocv_value = _mean_or_nan(losses, skipped, "loocv_error")
        diagnostics["loocv_skipped"] = len(skipped)
    else:
        loocv_value = float("nan")
    E, uncovered = loob_case_errors(fits, threshold)
    loob = float(E.mean())
    diagnostics["loob_uncovered"] = int(uncovered.size)
    try:
        star, dropped = err_star_from_fits(fits, threshold)
    except UndefinedEstimateError:
        star, dropped = float("nan"), fits.B
    diagnostics["err_star_dropped"] = dropped
    gamma = gamma_hat(model, data, threshold)
    return ErrEstimateBundle(
        apparent=apparent,
        loocv=loocv_value,
        simple_boot=simple_bootstrap_from_fits(fits, threshold),
        loob=loob,
        err_star=star,
        refined=refined_from_fits(fits, apparent, threshold),
        dot632=dot632_error(apparent, loob),
        dot632plus=dot632plus_error(apparent, loob, gamma),
        gamma_hat=gamma,
        r_hat_prime=relative_overfitting_rate(apparent, loob, gamma),
        B=fits.B,
        diagnostics=diagnostics,
    )


def forced_identity_fits(data, trainer, B=1):
    """Fits whose replicates all equal the original sample."""
    return ReplicateFits(data, trainer, identity_replicates(data, B))


__all__ = [
    "CostModel", "ErrEstimateBundle", "apparent_error", "dot632_error", "dot632plus_error",
    "err_star", "err_star_from_fits", "estimate_errors", "gamma_hat", "kfold_cv_error",
    "loob_case_errors", "loob_error", "loob_from_fits", "loocv_error", "refined_bootstrap_error",
    "refined_from_fits", "relative_overfitting_rate", "simple_bootstrap_error",
    "simple_bootstrap_from_fits",
]
