"""Smoothness of bootstrap estimators under case perturbations.

Two perturbations are supported: shifting probability mass onto one case
(the reweighting behind influence functions) and moving one case's feature
value.  In both, the replicate index patterns stay frozen so every change in
an estimator comes from the perturbation itself.
"""

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import clone

from ._validation import CLASS_1, InvalidInputError, check_positive_int
from .auc_estimators import auc_star_from_fits, lpob_pair_means
from .bootstrap import ReplicateFits
from .error_estimators import err_star_from_fits, loob_case_errors, replicate_losses
from .metrics import mann_whitney_kernel, misclassified

ERROR_METRICS = ("err_star", "loob")
AUC_METRICS = ("auc_star", "lpob")


def _log_weight(n_k, counts, epsilon):
    counts = np.asarray(counts, dtype=float)
    if epsilon == 0.0:
        return np.zeros_like(counts)
    if not -1.0 / (n_k - 1 if n_k > 1 else 1) <= epsilon < 1.0:
        raise InvalidInputError(f"epsilon={epsilon!r} gives negative masses for n={n_k}")
    base = 1.0 + n_k * epsilon / (1.0 - epsilon)
    with np.errstate(divide="ignore"):
        log_base = np.log(base) if base > 0 else -np.inf
    # 0 ** 0 == 1: a replicate without the case keeps its weight at base 0
    term = np.multiply(counts, log_base, out=np.zeros_like(counts), where=counts > 0)
    return n_k * np.log1p(-epsilon) + term


def perturbed_bootstrap_weight(n_k, N_i_b, epsilon, n_other=None):
    """Probability of a replicate including the perturbed case ``N_i_b`` times.

    ``(1 - eps)^n_k (1 + n_k eps / (1 - eps))^N (1/n_k)^n_k``, times
    ``(1/n_other)^n_other`` for the two-sample (stratified) form.
    """
    log_g = _log_weight(n_k, N_i_b, epsilon) - n_k * np.log(n_k)
    if n_other is not None:
        log_g = log_g - n_other * np.log(n_other)
    return np.exp(log_g)


def normalized_weights(n_k, counts, epsilon, mask=None):
    """Replicate weights rescaled to sum to one (over ``mask`` when given)."""
    log_g = _log_weight(n_k, counts, epsilon)
    if mask is not None:
        log_g = np.where(mask, log_g, -np.inf)
    top = np.max(log_g)
    if not np.isfinite(top):
        raise InvalidInputError("every replicate has zero weight under this perturbation")
    g = np.exp(log_g - top)
    return g / g.sum()


def _test_masses(n, i, epsilon):
    f = np.full(n, (1.0 - epsilon) / n)
    f[i] += epsilon
    return f


def _class_masses(data, i, epsilon):
    f1 = np.full(data.n1, 1.0 / data.n1)
    f2 = np.full(data.n2, 1.0 / data.n2)
    if data.y[i] == CLASS_1:
        f1 = _test_masses(data.n1, int(np.searchsorted(data.idx1, i)), epsilon)
    else:
        f2 = _test_masses(data.n2, int(np.searchsorted(data.idx2, i)), epsilon)
    return f1, f2


def _replicate_errors(fits, f, threshold):
    """Per-replicate error on its excluded cases under test masses ``f``."""
    L = replicate_losses(fits, threshold)
    w = fits.excluded * f
    tot = w.sum(axis=1)
    out = np.full(fits.B, np.nan)
    ok = tot > 0
    out[ok] = (w[ok] * L[ok]).sum(axis=1) / tot[ok]
    return out


def _replicate_aucs(fits, f1, f2):
    """Per-replicate AUC on its excluded pairs under class masses ``f1, f2``."""
    data = fits.data
    w1 = fits.excluded[:, data.idx1] * f1
    w2 = fits.excluded[:, data.idx2] * f2
    psi = mann_whitney_kernel(fits.scores[:, data.idx1, None], fits.scores[:, None, data.idx2])
    num = np.einsum("bi,bij,bj->b", w1, psi, w2)
    den = w1.sum(axis=1) * w2.sum(axis=1)
    out = np.full(fits.B, np.nan)
    ok = den > 0
    out[ok] = num[ok] / den[ok]
    return out


def perturbed_estimator_value(fits, i, epsilon, metric="err_star", threshold=0.0):
    """Estimator value after moving mass ``epsilon`` onto case ``i``.

    Replicates are reweighted by the perturbed bootstrap weights and the
    test cases by the perturbed masses.  Error metrics use the one-sample
    weights with the total size; AUC metrics perturb within the case's class.
    """
    data = fits.data
    if metric in ERROR_METRICS:
        n_k, f = data.n, _test_masses(data.n, i, epsilon)
    elif metric in AUC_METRICS:
        n_k = data.n1 if data.y[i] == CLASS_1 else data.n2
        f1, f2 = _class_masses(data, i, epsilon)
    else:
        raise InvalidInputError(
            f"metric must be one of {ERROR_METRICS + AUC_METRICS}, got {metric!r}"
        )
    counts = fits.counts[:, i]
    if metric == "err_star":
        per_rep = _replicate_errors(fits, f, threshold)
        g = normalized_weights(n_k, counts, epsilon, mask=~np.isnan(per_rep))
        return float(np.nansum(g * per_rep))
    if metric == "auc_star":
        per_rep = _replicate_aucs(fits, f1, f2)
        g = normalized_weights(n_k, counts, epsilon, mask=~np.isnan(per_rep))
        return float(np.nansum(g * per_rep))
    log_g = _log_weight(n_k, counts, epsilon)
    g = np.exp(log_g - log_g.max())
    if metric == "loob":
        L = replicate_losses(fits, threshold)
        E0, uncovered = loob_case_errors(fits, threshold)
        gI = g[:, None] * fits.excluded
        with np.errstate(invalid="ignore", divide="ignore"):
            E = (gI * L).sum(axis=0) / gI.sum(axis=0)
        E[uncovered] = E0[uncovered]
        return float(np.dot(f, E))
    # lpob
    A0, uncovered = lpob_pair_means(fits)
    I1 = fits.excluded[:, data.idx1] * g[:, None]
    I2 = fits.excluded[:, data.idx2]
    psi = mann_whitney_kernel(fits.scores[:, data.idx1, None], fits.scores[:, None, data.idx2])
    with np.errstate(invalid="ignore", divide="ignore"):
        A = np.einsum("bi,bij,bj->ij", I1, psi, I2) / (I1.T @ I2)
    for a, b in uncovered:
        A[a, b] = A0[a, b]
    return float(f1 @ A @ f2)


def first_excluding_replicate(fits, i):
    """Index of the first replicate that leaves case ``i`` out."""
    hits = np.flatnonzero(fits.excluded[:, i])
    if hits.size == 0:
        raise InvalidInputError(f"no replicate leaves out case {i}; increase B")
    return int(hits[0])


def crossing_replicate(fits, i, X_path, threshold=0.0):
    """First replicate leaving out case ``i`` whose surface the path crosses.

    ``X_path`` holds the successive feature vectors of case ``i``.  Falls back
    to the first excluding replicate when no surface is crossed.
    """
    y = fits.data.y[i]
    for b in np.flatnonzero(fits.excluded[:, i]):
        loss = misclassified(fits.models[b].decision_function(X_path), y, threshold)
        if loss.min() != loss.max():
            return int(b)
    return first_excluding_replicate(fits, i)


@dataclass
class PerturbationSweep:
    """Estimator curves over a grid of perturbation values."""

    case: int
    quantity: str
    grid: np.ndarray
    curves: dict = field(default_factory=dict)
    coordinate: int = None
    component_replicate: int = None

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        if self.grid.ndim != 1 or np.any(np.diff(self.grid) <= 0):
            raise InvalidInputError("sweep grid must be strictly increasing")

    @property
    def columns(self):
        return ["grid_value", *self.curves]

    def rows(self):
        table = np.column_stack([self.grid, *self.curves.values()])
        return [list(map(float, r)) for r in table]


def default_grid(data, coordinate, points=50, width=3.0):
    """``points`` values spanning the coordinate's mean +- ``width`` SDs."""
    col = data.X[:, coordinate]
    sd = col.std(ddof=1) if col.size > 1 else 1.0
    sd = sd if sd > 0 else 1.0
    return np.linspace(col.mean() - width * sd, col.mean() + width * sd, points)


def mass_sweep(fits, i, epsilons, metrics=("err_star", "loob"), threshold=0.0):
    """Estimator values over a grid of mass perturbations at case ``i``."""
    b0 = first_excluding_replicate(fits, i)
    curves = {"single_component": []}
    curves.update({m: [] for m in metrics})
    for eps in epsilons:
        f = _test_masses(fits.data.n, i, eps)
        curves["single_component"].append(_replicate_errors(fits, f, threshold)[b0])
        for m in metrics:
            curves[m].append(perturbed_estimator_value(fits, i, eps, m, threshold))
    return PerturbationSweep(i, "mass", epsilons, {k: np.array(v) for k, v in curves.items()},
                             component_replicate=b0)


class _SweepState:
    """Frozen replicates plus cached models for repeated feature edits."""

    def __init__(self, data, trainer, fits):
        self.data = data
        self.trainer = trainer
        self.fits = fits

    def at(self, i, x_new):
        data = self.data.with_case(i, x_new)
        scores = self.fits.scores.copy()
        contains = self.fits.counts[:, i] > 0
        for b, model in enumerate(self.fits.models):
            if contains[b]:
                rep = self.fits.replicates.indices[b]
                m = clone(self.trainer).fit(data.X[rep], data.y[rep])
                scores[b] = m.decision_function(data.X)
            else:
                # the case is only a test point for this model
                scores[b, i] = model.decision_function(x_new[None, :])[0]
        return self.fits.with_data(data, scores)


def feature_sweep(data, trainer, case, coordinate, grid=None, B=1000, random_state=None,
                  threshold=0.0, include_auc=False, fits=None, component_replicate=None):
    """Trace estimators while one case's feature coordinate moves along ``grid``.

    Tracks the single-replicate component, ``err_star`` and ``loob``; with ``include_auc`` also the
    single-replicate AUC, ``auc_star`` and ``lpob``.  The single component
    comes from ``component_replicate``, by default the first replicate leaving
    the case out whose decision surface the sweep crosses.
    """
    if not 0 <= case < data.n:
        raise InvalidInputError(f"case index {case} out of range for n={data.n}")
    if not 0 <= coordinate < data.p:
        raise InvalidInputError(f"coordinate {coordinate} out of range for p={data.p}")
    grid = default_grid(data, coordinate) if grid is None else np.asarray(grid, dtype=float)
    if not np.all(np.isfinite(grid)):
        raise InvalidInputError("sweep grid must be finite")
    if fits is None:
        B = check_positive_int(B, "B")
        fits = ReplicateFits.draw(data, trainer, B, random_state, keep_models=True)
    elif fits.models is None:
        raise InvalidInputError("feature sweeps need fits drawn with keep_models=True")
    state = _SweepState(data, trainer, fits)
    path = np.tile(data.X[case], (len(grid), 1))
    path[:, coordinate] = grid
    if component_replicate is None:
        b0 = crossing_replicate(fits, case, path, threshold)
    elif not fits.excluded[component_replicate, case]:
        raise InvalidInputError(f"replicate {component_replicate} does not leave out case {case}")
    else:
        b0 = int(component_replicate)
    names = ["single_component", "err_star", "loob"]
    if include_auc:
        names += ["auc_single_component", "auc_star", "lpob"]
    curves = {k: np.empty(len(grid)) for k in names}
    for g, x_new in enumerate(path):
        fv = state.at(case, x_new)
        f = np.full(data.n, 1.0 / data.n)
        curves["single_component"][g] = _replicate_errors(fv, f, threshold)[b0]
        curves["err_star"][g] = err_star_from_fits(fv, threshold)[0]
        curves["loob"][g] = float(loob_case_errors(fv, threshold)[0].mean())
        if include_auc:
            f1 = np.full(data.n1, 1.0 / data.n1)
            f2 = np.full(data.n2, 1.0 / data.n2)
            curves["auc_single_component"][g] = _replicate_aucs(fv, f1, f2)[b0]
            curves["auc_star"][g] = auc_star_from_fits(fv)[0]
            curves["lpob"][g] = float(lpob_pair_means(fv)[0].mean())
    return PerturbationSweep(case, "feature", grid, curves, coordinate=coordinate,
                             component_replicate=b0)


@dataclass(frozen=True)
class SmoothnessMetric:
    """Largest adjacent-point jump and the number of jumps above a threshold."""

    max_jump: float
    jump_count: int
    threshold: float


def smoothness_metric(curve, threshold=0.0):
    """Jump statistics of a curve (array or ``(sweep, column)`` pair)."""
    if isinstance(curve, tuple):
        sweep, column = curve
        curve = sweep.curves[column]
    values = np.asarray(curve, dtype=float)
    if values.size < 2:
        return SmoothnessMetric(0.0, 0, float(threshold))
    jumps = np.abs(np.diff(values))
    return SmoothnessMetric(float(jumps.max()), int(np.sum(jumps > threshold)), float(threshold))


def decision_surfaces(data, trainer, fits, k=5):
    """Linear surfaces ``(intercept, coef...)`` of the full model and ``k`` replicates."""
    if fits.models is None:
        raise InvalidInputError("decision surfaces need fits drawn with keep_models=True")
    full = clone(trainer).fit(data.X, data.y)
    models = [("full", full)] + [(f"replicate_{b}", m) for b, m in enumerate(fits.models[:k])]
    rows = []
    for label, m in models:
        if not hasattr(m, "coef_"):
            raise InvalidInputError("decision surfaces are only defined for linear rules")
        rows.append((label, float(m.intercept_), *map(float, np.ravel(m.coef_))))
    return rows
