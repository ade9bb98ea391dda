"""Empirical performance metrics computed from classifier scores.

Scores are oriented so that a higher score means "more like class 1".  Ties
are compared with exact floating equality; near-ties are not snapped.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.stats import rankdata

from ._validation import CLASS_1, CLASS_2, InvalidInputError, check_labels, check_scores


@dataclass(frozen=True)
class ScoreSet:
    """Scores of class-1 cases and class-2 cases."""

    scores1: np.ndarray
    scores2: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "scores1", check_scores(self.scores1, "scores1", allow_empty=True))
        object.__setattr__(self, "scores2", check_scores(self.scores2, "scores2", allow_empty=True))

    @classmethod
    def from_labels(cls, scores, y):
        """Split a score vector by labels in {1, 2}."""
        scores = check_scores(scores, allow_empty=True)
        y = check_labels(y)
        if scores.shape != y.shape:
            raise InvalidInputError("scores and labels must have the same length")
        return cls(scores[y == CLASS_1], scores[y == CLASS_2])

    @property
    def n1(self):
        return self.scores1.size

    @property
    def n2(self):
        return self.scores2.size

    def swapped(self):
        return ScoreSet(self.scores2, self.scores1)

    def _require_both(self):
        if self.n1 == 0 or self.n2 == 0:
            raise InvalidInputError("both classes need at least one score")


@dataclass(frozen=True)
class RocCurve:
    """Empirical ROC curve as parallel arrays, from (0, 0) to (1, 1).

    ``tp_counts``/``fp_counts`` hold the integer counts behind each point when
    the curve comes from data; they let the trapezoid rule run in exact
    integer arithmetic.
    """

    fpf: np.ndarray
    tpf: np.ndarray
    thresholds: Optional[np.ndarray] = None
    tp_counts: Optional[np.ndarray] = None
    fp_counts: Optional[np.ndarray] = None
    n1: Optional[int] = None
    n2: Optional[int] = None

    def __post_init__(self):
        fpf = np.asarray(self.fpf, dtype=float)
        tpf = np.asarray(self.tpf, dtype=float)
        if fpf.shape != tpf.shape or fpf.ndim != 1 or fpf.size < 2:
            raise InvalidInputError("ROC needs matching 1-D fpf/tpf arrays with >= 2 points")
        if np.any(np.diff(fpf) < 0) or np.any(np.diff(tpf) < 0):
            raise InvalidInputError("ROC points must be non-decreasing in FPF and TPF")
        if (fpf[0], tpf[0]) != (0.0, 0.0) or (fpf[-1], tpf[-1]) != (1.0, 1.0):
            raise InvalidInputError("ROC must run from (0, 0) to (1, 1)")
        object.__setattr__(self, "fpf", fpf)
        object.__setattr__(self, "tpf", tpf)

    @property
    def points(self):
        return list(zip(self.fpf.tolist(), self.tpf.tolist()))


@dataclass(frozen=True)
class CostModel:
    """Misclassification costs and class priors.

    ``c12`` is the cost of calling a class-1 case class 2, ``c21`` the reverse.
    Priors left as ``None`` are estimated from class counts.
    """

    c12: float = 1.0
    c21: float = 1.0
    p1: Optional[float] = None
    p2: Optional[float] = None

    def __post_init__(self):
        if self.c12 < 0 or self.c21 < 0:
            raise InvalidInputError("costs must be non-negative")
        if (self.p1 is None) != (self.p2 is None):
            raise InvalidInputError("give both priors or neither")
        if self.p1 is not None:
            if not (0.0 <= self.p1 <= 1.0 and 0.0 <= self.p2 <= 1.0):
                raise InvalidInputError("priors must lie in [0, 1]")
            if abs(self.p1 + self.p2 - 1.0) > 1e-12:
                raise InvalidInputError("priors must sum to 1")


def empirical_roc(s: ScoreSet) -> RocCurve:
    """ROC curve over every threshold between successive distinct scores.

    Thresholds are ``+inf``, the midpoints between consecutive distinct pooled
    scores (in decreasing order) and ``-inf``; a case is called class 1 when its
    score exceeds the threshold.  Scores tied across classes produce a
    diagonal segment.
    """
    s._require_both()
    distinct = np.unique(np.concatenate([s.scores1, s.scores2]))[::-1]
    # counts of scores >= each distinct value
    tp = np.searchsorted(np.sort(-s.scores1), -distinct, side="right")
    fp = np.searchsorted(np.sort(-s.scores2), -distinct, side="right")
    tp = np.concatenate([[0], tp]).astype(np.int64)
    fp = np.concatenate([[0], fp]).astype(np.int64)
    mids = (distinct[:-1] + distinct[1:]) / 2.0
    thresholds = np.concatenate([[np.inf], mids, [-np.inf]])
    return RocCurve(
        fpf=fp / s.n2,
        tpf=tp / s.n1,
        thresholds=thresholds,
        tp_counts=tp,
        fp_counts=fp,
        n1=s.n1,
        n2=s.n2,
    )


def auc_trapezoid(roc: RocCurve) -> float:
    """Area under an ROC curve by the trapezoidal rule."""
    if roc.tp_counts is not None:
        tp = [int(v) for v in roc.tp_counts]
        fp = [int(v) for v in roc.fp_counts]
        doubled = sum((fp[k] - fp[k - 1]) * (tp[k] + tp[k - 1]) for k in range(1, len(tp)))
        return doubled / (2 * roc.n1 * roc.n2)
    return float(np.sum(np.diff(roc.fpf) * (roc.tpf[1:] + roc.tpf[:-1])) / 2.0)


def mann_whitney_kernel(a, b):
    """Pairwise kernel: 1 if a > b, 1/2 if equal, 0 if a < b (broadcasts)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return (a > b) + 0.5 * (a == b)


def auc_mann_whitney(s: ScoreSet) -> float:
    """Mann-Whitney estimate of P[score | class 2 < score | class 1].

    Computed through mid-ranks, which gives the same value as averaging the
    pairwise kernel over all ``n1 * n2`` pairs.
    """
    s._require_both()
    ranks = rankdata(np.concatenate([s.scores1, s.scores2]))
    n1, n2 = s.n1, s.n2
    # mid-ranks are half-integers, so this sum is exact
    u = float(np.sum(ranks[:n1])) - n1 * (n1 + 1) / 2.0
    return u / (n1 * n2)


def auc_from_scores(scores, y) -> float:
    """Mann-Whitney AUC of a score vector split by labels in {1, 2}."""
    return auc_mann_whitney(ScoreSet.from_labels(scores, y))


def error_rate(s: ScoreSet, threshold: float = 0.0, costs: Optional[CostModel] = None) -> float:
    """Empirical risk ``c12 * P1 * FNF + c21 * P2 * FPF`` at one threshold.

    A case is called class 1 when its score is strictly above ``threshold``.
    With unit costs and count-based priors this is the 0-1 error rate.
    """
    costs = costs or CostModel()
    n1, n2 = s.n1, s.n2
    if n1 + n2 == 0:
        raise InvalidInputError("need at least one score")
    if costs.p1 is None:
        p1, p2 = n1 / (n1 + n2), n2 / (n1 + n2)
    else:
        p1, p2 = costs.p1, costs.p2
    fnf = np.count_nonzero(s.scores1 <= threshold) / n1 if n1 else 0.0
    fpf = np.count_nonzero(s.scores2 > threshold) / n2 if n2 else 0.0
    return float(costs.c12 * p1 * fnf + costs.c21 * p2 * fpf)


def misclassified(scores, y, threshold: float = 0.0):
    """0-1 loss per case (broadcasts over leading replicate axes)."""
    scores = np.asarray(scores, dtype=float)
    called_1 = scores > threshold
    return np.where(np.asarray(y) == CLASS_1, ~called_1, called_1).astype(float)
