"""Bias, standard-error and influence-function variance estimates.

A statistic here is a callable ``stat(x, w)`` evaluated on the rows of ``x``
carrying probability masses ``w`` (summing to one).  Writing statistics
against masses rather than sample sizes is what makes them functionals of the
empirical distribution, which the influence-function operations require.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import InvalidInputError, check_positive_int, check_random_state
from .error_estimators import loob_case_errors, replicate_losses
from .metrics import misclassified

DEFAULT_SCHEDULE = (1e-2, 5e-3, 2.5e-3)


def uniform_masses(n):
    return np.full(n, 1.0 / n)


def weighted_mean(x, w):
    """Mean of ``x`` (rows) under masses ``w``."""
    return np.tensordot(w, np.asarray(x, dtype=float), axes=1)


def weighted_variance(x, w):
    """Plug-in variance ``sum w (x - m)^2``; a functional, unlike the n-1 version."""
    x = np.asarray(x, dtype=float)
    m = weighted_mean(x, w)
    return float(np.dot(w, (x - m) ** 2))


def weighted_trimmed_mean(x, w, alpha=0.1):
    """Mean of the quantile function over ``[alpha, 1 - alpha]``."""
    x = np.asarray(x, dtype=float)
    order = np.argsort(x, kind="stable")
    xs, ws = x[order], np.asarray(w, dtype=float)[order]
    upper = np.cumsum(ws)
    lower = upper - ws
    covered = np.clip(np.minimum(upper, 1.0 - alpha) - np.maximum(lower, alpha), 0.0, None)
    return float(np.dot(covered, xs) / (1.0 - 2.0 * alpha))


def _evaluate(stat, x, w=None):
    x = np.asarray(x, dtype=float)
    if w is None:
        w = uniform_masses(len(x))
    return float(stat(x, w))


@dataclass(frozen=True)
class BiasSE:
    bias: float
    se: float


def bootstrap_bias_se(stat, x, B=1000, random_state=None):
    """Bootstrap bias and standard error (``B - 1`` denominator)."""
    x = np.asarray(x, dtype=float)
    B = check_positive_int(B, "B", minimum=2)
    rng = check_random_state(random_state)
    n = len(x)
    theta = _evaluate(stat, x)
    idx = rng.integers(0, n, size=(B, n))
    reps = np.array([_evaluate(stat, x[row]) for row in idx])
    return BiasSE(float(reps.mean() - theta), float(reps.std(ddof=1)))


def jackknife_bias_se(stat, x):
    """Jackknife bias ``(n-1)(mean - full)`` and standard error."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    if n < 2:
        raise InvalidInputError("jackknife needs n >= 2")
    theta = _evaluate(stat, x)
    keep = ~np.eye(n, dtype=bool)
    reps = np.array([_evaluate(stat, x[row]) for row in keep])
    dot = reps.mean()
    se = np.sqrt((n - 1) / n * np.sum((reps - dot) ** 2))
    return BiasSE(float((n - 1) * (dot - theta)), float(se))


def perturbed_masses(n, i, epsilon):
    """Masses ``(1 - eps)/n`` everywhere plus ``eps`` on case ``i``."""
    f = np.full(n, (1.0 - epsilon) / n)
    f[i] += epsilon
    return f


def jackknife_epsilon(n):
    """The perturbation that removes all mass from the perturbed case."""
    return -1.0 / (n - 1)


def perturbed_value(stat, x, i, epsilon):
    x = np.asarray(x, dtype=float)
    return float(stat(x, perturbed_masses(len(x), i, epsilon)))


def check_functional(stat, x, rtol=1e-10, atol=1e-12):
    """Reject ``stat`` unless duplicating every case leaves its value unchanged."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    base = _evaluate(stat, x)
    doubled = _evaluate(stat, np.concatenate([x, x]), np.full(2 * n, 0.5 / n))
    if not np.isclose(base, doubled, rtol=rtol, atol=atol):
        raise InvalidInputError(
            f"statistic is not a functional of the empirical distribution: "
            f"{base!r} on the data, {doubled!r} with every case duplicated"
        )


def _richardson(steps, values):
    """Extrapolate central differences (error in even powers of the step) to 0."""
    table = list(values)
    steps = list(steps)
    for level in range(1, len(table)):
        nxt = []
        for k in range(len(table) - 1):
            r = (steps[k] / steps[k + level]) ** (2 * level)
            nxt.append((r * table[k + 1] - table[k]) / (r - 1.0))
        table = nxt
    return table[0]


def _usable_schedule(n, schedule):
    schedule = np.asarray(schedule, dtype=float)
    if np.any(schedule <= 0) or np.any(np.diff(schedule) >= 0):
        raise InvalidInputError("epsilon schedule must be positive and strictly decreasing")
    # keep the perturbed case's mass non-negative at -eps
    limit = 0.5 / max(n - 1, 1)
    if schedule[0] > limit:
        schedule = schedule * (limit / schedule[0])
    return schedule


def empirical_influence(stat, x, i, epsilon_schedule=DEFAULT_SCHEDULE, check=True):
    """Derivative of ``stat`` under a point-mass perturbation at case ``i``.

    Central differences over ``epsilon_schedule`` combined by Richardson
    extrapolation.  The schedule is scaled down when ``n`` is large enough
    that ``-eps`` would make a mass negative.
    """
    x = np.asarray(x, dtype=float)
    if check:
        check_functional(stat, x)
    steps = _usable_schedule(len(x), epsilon_schedule)
    diffs = [
        (perturbed_value(stat, x, i, h) - perturbed_value(stat, x, i, -h)) / (2.0 * h)
        for h in steps
    ]
    return float(_richardson(steps, diffs))


def empirical_influence_all(stat, x, epsilon_schedule=DEFAULT_SCHEDULE):
    x = np.asarray(x, dtype=float)
    check_functional(stat, x)
    return np.array([
        empirical_influence(stat, x, i, epsilon_schedule, check=False) for i in range(len(x))
    ])


def variance_from_influence(U, n=None):
    U = np.asarray(U, dtype=float)
    n = U.size if n is None else n
    return float(np.sum(U * U) / n**2)


@dataclass(frozen=True)
class InfluenceReport:
    """Per-case influence values and the variance they imply."""

    values: np.ndarray
    variance: float
    residual_mean: float

    @property
    def se(self):
        return float(np.sqrt(self.variance))


def influence_report(stat, x, epsilon_schedule=DEFAULT_SCHEDULE):
    U = empirical_influence_all(stat, x, epsilon_schedule)
    return InfluenceReport(U, variance_from_influence(U), float(U.mean()))


def if_variance(stat, x, epsilon_schedule=DEFAULT_SCHEDULE):
    """``(1/n^2) sum U_i^2`` from numerically computed influence values."""
    return influence_report(stat, x, epsilon_schedule).variance


# LOOB error: closed form


def _augmented_loob(fits, threshold):
    """Loss, exclusion and count matrices with one supplement row per uncovered case.

    A supplement row only counts as excluding the case it was drawn for.
    """
    L = replicate_losses(fits, threshold).astype(float)
    I = fits.excluded.astype(float)
    N = fits.counts.astype(float)
    E, uncovered = loob_case_errors(fits, threshold)
    if uncovered.size:
        extra_L, extra_I, extra_N = [], [], []
        y = fits.data.y
        for i in uncovered:
            counts, s = fits.conditioned([i])
            row_I = np.zeros(fits.data.n)
            row_I[i] = 1.0
            extra_L.append(misclassified(s, y, threshold))
            extra_I.append(row_I)
            extra_N.append(counts)
        L = np.vstack([L, np.asarray(extra_L, dtype=float)])
        I = np.vstack([I, extra_I])
        N = np.vstack([N, np.asarray(extra_N, dtype=float)])
    return L, I, N, E


def loob_influence(fits, threshold=0.0):
    """Closed-form influence values of the LOOB error estimate.

    ``U_i = (2 + 1/(n-1)) (E_i - Err1) + n sum_b (N_i^b - Nbar_i) l^b / sum_b I_i^b``
    with ``l^b = (1/n) sum_j I_j^b L_j^b`` and ``Nbar_i`` the mean count of
    case ``i`` over replicates.
    """
    L, I, N, E = _augmented_loob(fits, threshold)
    n = fits.data.n
    err1 = E.mean()
    l_b = (I * L).sum(axis=1) / n
    Nbar = N.mean(axis=0)
    cover = I.sum(axis=0)
    cov_term = n * ((N - Nbar).T @ l_b) / cover
    return (2.0 + 1.0 / (n - 1)) * (E - err1) + cov_term


def if_variance_loob_error(data=None, trainer=None, B=100, random_state=None,
                           threshold=0.0, fits=None):
    """Influence-function variance of the LOOB error estimate."""
    if fits is None:
        from .bootstrap import ReplicateFits

        fits = ReplicateFits.draw(data, trainer, B, random_state)
    U = loob_influence(fits, threshold)
    return variance_from_influence(U)


# Exact epsilon-derivatives of the reweighted estimators


def loob_influence_derivative(fits, threshold=0.0):
    """Exact derivative of the replicate-reweighted LOOB at ``eps = 0``.

    Perturbing case ``m`` shifts the test masses and reweights replicate ``b``
    by ``g_b`` with ``d log g_b / d eps = n (N_m^b - 1)``.  This carries no
    small-sample correction and serves as a cross-check.
    """
    L = replicate_losses(fits, threshold).astype(float)
    I = fits.excluded.astype(float)
    E, uncovered = loob_case_errors(fits, threshold)
    cover = I.sum(axis=0)
    cover[uncovered] = 1.0  # supplement-only cases have zero reweighting term
    R = (I * (L - E) / cover).sum(axis=1)
    return (E - E.mean()) + fits.counts.T.astype(float) @ R


def lpob_influence_derivative(fits):
    """Exact derivative of the reweighted LPOB estimate, per case.

    Returns ``(U1, U2)``; the variance is ``sum_k sum U_k^2 / n_k^2``.
    """
    from .auc_estimators import _psi_chunks, lpob_pair_means

    data = fits.data
    n1, n2 = data.n1, data.n2
    A, _ = lpob_pair_means(fits)
    lpob = A.mean()
    den = np.zeros((n1, n2))
    for _, _, I1, I2 in _psi_chunks(fits):
        den += I1.T @ I2
    den_safe = np.where(den > 0, den, 1.0)
    R = np.empty(fits.B)
    for rows, psi, I1, I2 in _psi_chunks(fits):
        R[rows] = np.einsum("bi,bij,bj->b", I1, (psi - A) / den_safe, I2)
    N = fits.counts.astype(float)
    scale = 1.0 / (n1 * n2)
    U1 = (A.mean(axis=1) - lpob) + n1 * scale * (N[:, data.idx1].T @ R)
    U2 = (A.mean(axis=0) - lpob) + n2 * scale * (N[:, data.idx2].T @ R)
    return U1, U2


def two_sample_variance(U1, U2):
    U1, U2 = np.asarray(U1, dtype=float), np.asarray(U2, dtype=float)
    return float(np.sum(U1**2) / U1.size**2 + np.sum(U2**2) / U2.size**2)


def if_variance_lpob(fits):
    """Variance of LPOB from its plain reweighting derivative."""
    return two_sample_variance(*lpob_influence_derivative(fits))


__all__ = [
    "BiasSE", "InfluenceReport", "bootstrap_bias_se", "check_functional", "empirical_influence",
    "empirical_influence_all", "if_variance", "if_variance_loob_error", "if_variance_lpob",
    "influence_report", "jackknife_bias_se", "jackknife_epsilon", "loob_influence",
    "loob_influence_derivative", "lpob_influence_derivative", "perturbed_masses",
    "perturbed_value", "two_sample_variance", "uniform_masses", "weighted_mean",
    "weighted_trimmed_mean", "weighted_variance",
]
