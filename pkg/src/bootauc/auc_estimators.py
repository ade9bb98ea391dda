"""Bootstrap estimators of a classifier's AUC.

These mirror the error-rate family with the Mann-Whitney statistic as the
performance measure.  Because AUC is a two-sample statistic every replicate
is stratified, and the leave-out logic works on (class-1, class-2) pairs.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata
from sklearn.base import clone

from ._validation import UndefinedEstimateError
from .bootstrap import ReplicateFits
from .error_estimators import W_APPARENT, W_OUT
from .metrics import ScoreSet, auc_from_scores, empirical_roc, mann_whitney_kernel

GAMMA_AUC = 0.5
_CHUNK_ELEMENTS = 4_000_000


@dataclass
class AucEstimateBundle:
    """All AUC estimates computed from one shared replicate set."""

    apparent_auc: float
    sb_auc: float
    auc_star: float
    dot632_auc: float
    dot632plus_auc: float
    lpob_auc: float
    r_hat_prime: float
    B: int
    gamma_auc: float = GAMMA_AUC
    diagnostics: dict = field(default_factory=dict)

    ESTIMATORS = ("apparent_auc", "sb_auc", "auc_star", "dot632_auc",
                  "dot632plus_auc", "lpob_auc")

    def as_dict(self):
        return {name: getattr(self, name) for name in self.ESTIMATORS}


def gamma_auc():
    """No-information AUC; 0.5 whatever the classifier and data."""
    return GAMMA_AUC


def apparent_auc(model, data):
    """Mann-Whitney AUC of the model's scores on its training data."""
    return auc_from_scores(model.decision_function(data.X), data.y)


def _row_aucs(scores, data):
    """Mann-Whitney AUC of every row of a ``(B, n)`` score matrix."""
    cols = np.concatenate([data.idx1, data.idx2])
    ranks = rankdata(scores[:, cols], axis=1)
    n1, n2 = data.n1, data.n2
    u = ranks[:, :n1].sum(axis=1) - n1 * (n1 + 1) / 2.0
    return u / (n1 * n2)


def _psi_chunks(fits):
    """Yield ``(rows, psi, I1, I2)`` with ``psi`` of shape (rows, n1, n2)."""
    data = fits.data
    S1 = fits.scores[:, data.idx1]
    S2 = fits.scores[:, data.idx2]
    I1 = fits.excluded[:, data.idx1].astype(float)
    I2 = fits.excluded[:, data.idx2].astype(float)
    step = max(1, _CHUNK_ELEMENTS // max(1, data.n1 * data.n2))
    for start in range(0, fits.B, step):
        rows = slice(start, start + step)
        psi = mann_whitney_kernel(S1[rows, :, None], S2[rows, None, :])
        yield rows, psi, I1[rows], I2[rows]


def sb_auc_from_fits(fits):
    return float(_row_aucs(fits.scores, fits.data).mean())


def auc_star_from_fits(fits):
    """Mean over replicates of the AUC on the replicate's left-out pairs.

    Replicates leaving out no case of some class are dropped.  Returns
    ``(value, dropped)``.
    """
    values = []
    for _, psi, I1, I2 in _psi_chunks(fits):
        num = np.einsum("bi,bij,bj->b", I1, psi, I2)
        den = I1.sum(axis=1) * I2.sum(axis=1)
        values.append(np.where(den > 0, num / np.where(den > 0, den, 1.0), np.nan))
    values = np.concatenate(values)
    keep = ~np.isnan(values)
    if not keep.any():
        raise UndefinedEstimateError("no replicate leaves out a case of both classes")
    return float(values[keep].mean()), int((~keep).sum())


def lpob_pair_means(fits):
    """Per-pair kernel average over replicates leaving out both cases.

    Returns ``(A, uncovered)`` with ``A`` of shape (n1, n2).  Pairs left out
    together by no replicate get a supplementary replicate drawn conditionally
    on excluding both.
    """
    data = fits.data
    num = np.zeros((data.n1, data.n2))
    den = np.zeros((data.n1, data.n2))
    for _, psi, I1, I2 in _psi_chunks(fits):
        num += np.einsum("bi,bij,bj->ij", I1, psi, I2)
        den += I1.T @ I2
    uncovered = np.argwhere(den == 0)
    with np.errstate(invalid="ignore", divide="ignore"):
        A = num / den
    for a, b in uncovered:
        i, j = data.idx1[a], data.idx2[b]
        _, s = fits.conditioned([i, j])
        A[a, b] = mann_whitney_kernel(s[i], s[j])
    return A, uncovered


def lpob_from_fits(fits):
    A, _ = lpob_pair_means(fits)
    return float(A.mean())


def _fits(data, trainer, B, random_state):
    return ReplicateFits.draw(data, trainer, B, random_state)


def sb_auc(data, trainer, B=100, random_state=None):
    """Average AUC of replicate-trained models on the full data."""
    return sb_auc_from_fits(_fits(data, trainer, B, random_state))


def auc_star(data, trainer, B=100, random_state=None):
    return auc_star_from_fits(_fits(data, trainer, B, random_state))[0]


def lpob_auc(data, trainer, B=100, random_state=None):
    """Leave-pair-out bootstrap AUC."""
    return lpob_from_fits(_fits(data, trainer, B, random_state))


def dot632_auc(apparent, star):
    return W_APPARENT * apparent + W_OUT * star


def relative_overfitting_rate_auc(apparent, star):
    """Relative overfitting rate for AUC, in [0, 1].

    Non-zero only under the strict ordering ``apparent > star > 0.5``;
    boundary ties and a star value at or below 0.5 give 0.
    """
    if apparent > star > GAMMA_AUC:
        return (star - apparent) / (GAMMA_AUC - apparent)
    return 0.0


def dot632plus_auc(apparent, star):
    """.632 AUC plus a non-positive no-information correction.

    The correction uses ``max(star, 0.5)``; it vanishes whenever the rate is 0.
    """
    r = relative_overfitting_rate_auc(apparent, star)
    star_c = max(star, GAMMA_AUC)
    correction = (star_c - apparent) * (W_APPARENT * W_OUT * r) / (1.0 - W_APPARENT * r)
    return dot632_auc(apparent, star) + correction


def no_info_roc_check(model, data):
    """ROC of the model's scores under the no-information distribution.

    Every score is paired with every label, giving ``(n1 + n2)**2`` cases;
    the resulting ROC has FPF equal to TPF at every threshold.
    """
    data.require_both_classes()
    h = model.decision_function(data.X)
    s1 = np.repeat(h, data.n1)
    s2 = np.repeat(h, data.n2)
    return empirical_roc(ScoreSet(s1, s2))


def estimate_aucs(data, trainer, B=100, random_state=None, fits=None, model=None):
    """Every AUC estimator on one shared set of ``B`` replicates."""
    if fits is None:
        fits = _fits(data, trainer, B, random_state)
    if model is None:
        model = clone(trainer).fit(data.X, data.y)
    apparent = apparent_auc(model, data)
    try:
        star, dropped = auc_star_from_fits(fits)
    except UndefinedEstimateError:
        star, dropped = float("nan"), fits.B
    A, uncovered = lpob_pair_means(fits)
    return AucEstimateBundle(
        apparent_auc=apparent,
        sb_auc=sb_auc_from_fits(fits),
        auc_star=star,
        dot632_auc=dot632_auc(apparent, star),
        dot632plus_auc=dot632plus_auc(apparent, star),
        lpob_auc=float(A.mean()),
        r_hat_prime=relative_overfitting_rate_auc(apparent, star),
        B=fits.B,
        diagnostics={"auc_star_dropped": dropped, "lpob_uncovered_pairs": int(len(uncovered))},
    )
