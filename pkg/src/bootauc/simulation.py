"""Monte-Carlo experiments on two-class multinormal data.

Every trial draws a training set, fits the classifier, computes all bootstrap
estimators on one shared replicate set, and measures the true conditional
performance on a large independent test set.  Trial ``g`` draws all of its
randomness from ``SeedSequence(seed, spawn_key=(g,))``, split into data,
bootstrap and test streams, so results do not depend on execution order or
on the number of worker processes.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.stats import norm
from sklearn.base import clone

from ._validation import InvalidInputError
from .auc_estimators import AucEstimateBundle, auc_star_from_fits, estimate_aucs
from .bootstrap import ReplicateFits
from .discriminant import make_classifier
from .error_estimators import ErrEstimateBundle, estimate_errors
from .metrics import ScoreSet, auc_mann_whitney, error_rate
from .resampling import LabeledDataset
from .uncertainty import lpob_influence_derivative, two_sample_variance

METRICS = ("auc", "error")
STREAMS = ("data", "bootstrap", "test")


@dataclass(frozen=True)
class ExperimentConfig:
    """Settings of one Monte-Carlo experiment.

    ``delta`` is the Mahalanobis distance between the class means; class 2
    is centred at ``c * 1`` with ``c = delta / sqrt(p)`` unless ``c`` is given.
    """

    p: int = 5
    n1: int = 20
    n2: int = 20
    delta: float = 0.8
    c: float = None
    trials: int = 200
    B: int = 100
    classifier: str = "lda"
    classifier2: str = "qda"
    test_size: int = 1000
    seed: int = 0
    metric: str = "auc"
    threshold: float = 0.0
    sizes: tuple = (20, 40, 80)

    def __post_init__(self):
        for name in ("p", "n1", "n2", "trials", "B", "test_size"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or isinstance(value, bool) or value < 1:
                raise InvalidInputError(f"config field '{name}' must be an integer >= 1, got {value!r}")
        if not np.isfinite(self.delta) or self.delta < 0:
            raise InvalidInputError(f"config field 'delta' must be finite and >= 0, got {self.delta!r}")
        if self.c is not None and not np.isfinite(self.c):
            raise InvalidInputError(f"config field 'c' must be finite, got {self.c!r}")
        if self.metric not in METRICS:
            raise InvalidInputError(f"config field 'metric' must be one of {METRICS}, got {self.metric!r}")
        for name in ("classifier", "classifier2"):
            make_classifier(getattr(self, name))
        if not isinstance(self.seed, (int, np.integer)) or self.seed < 0:
            raise InvalidInputError(f"config field 'seed' must be a non-negative integer, got {self.seed!r}")
        sizes = tuple(self.sizes)
        if not sizes or any(not isinstance(s, (int, np.integer)) or s < 2 for s in sizes):
            raise InvalidInputError(f"config field 'sizes' must list integers >= 2, got {self.sizes!r}")
        object.__setattr__(self, "sizes", sizes)

    @property
    def shift(self):
        return self.delta / math.sqrt(self.p) if self.c is None else float(self.c)

    def with_size(self, n1, n2=None):
        return replace(self, n1=int(n1), n2=int(n1 if n2 is None else n2))

    def to_dict(self):
        out = asdict(self)
        out["sizes"] = list(self.sizes)
        return out


def trial_streams(seed, trial):
    """Independent generators (data, bootstrap, test) for one trial."""
    children = np.random.SeedSequence(seed, spawn_key=(int(trial),)).spawn(len(STREAMS))
    return tuple(np.random.default_rng(s) for s in children)


def bayes_auc(delta):
    """AUC of the Bayes rule for equal-covariance Gaussians, ``Phi(delta / sqrt(2))``.

    The Bayes score difference between a class-1 and a class-2 case is
    normal with mean ``delta`` and variance 2 (in Mahalanobis units).
    """
    return float(norm.cdf(delta / math.sqrt(2.0)))


def bayes_error(delta):
    """Bayes error at equal priors, ``Phi(-delta / 2)``."""
    return float(norm.cdf(-delta / 2.0))


def gen_multinormal(config, rng, n1=None, n2=None):
    """Class 1 from ``N(0, I)``, class 2 from ``N(c 1, I)``."""
    n1 = config.n1 if n1 is None else n1
    n2 = config.n2 if n2 is None else n2
    X1 = rng.standard_normal((n1, config.p))
    X2 = rng.standard_normal((n2, config.p)) + config.shift
    y = np.concatenate([np.full(n1, 1), np.full(n2, 2)])
    return LabeledDataset(np.vstack([X1, X2]), y)


def true_conditional_metric(model, config, rng, metric=None):
    """AUC (or error) of ``model`` on a fresh ``test_size``-per-class sample."""
    metric = config.metric if metric is None else metric
    test = gen_multinormal(config, rng, config.test_size, config.test_size)
    s = ScoreSet.from_labels(model.decision_function(test.X), test.y)
    if metric == "auc":
        return auc_mann_whitney(s)
    return error_rate(s, config.threshold)


def rms(estimates, truth):
    """Root mean squared difference between per-trial estimates and truths."""
    d = np.asarray(estimates, dtype=float) - np.asarray(truth, dtype=float)
    return float(np.sqrt(np.mean(d * d)))


def rms_around_mean(estimates, truth):
    """RMS of the estimates around the mean of the truths."""
    e = np.asarray(estimates, dtype=float)
    return float(np.sqrt(np.mean((e - np.mean(truth)) ** 2)))


def corr_coef(estimates, truth):
    """Sample correlation and a flag set when either side has zero variance.

    A degenerate correlation is reported as 0.
    """
    e = np.asarray(estimates, dtype=float)
    t = np.asarray(truth, dtype=float)
    if e.size < 2 or np.ptp(e) == 0 or np.ptp(t) == 0:
        return 0.0, True
    return float(np.clip(np.corrcoef(e, t)[0, 1], -1.0, 1.0)), False


class TrialFailure(RuntimeError):
    """A Monte-Carlo trial raised; carries what is needed to rerun it alone."""

    def __init__(self, trial, seed, cause):
        self.trial = trial
        self.seed = seed
        super().__init__(
            f"trial {trial} failed (seed={seed}, spawn_key=({trial},)): "
            f"{type(cause).__name__}: {cause}"
        )


def estimator_names(metric):
    if metric == "auc":
        return AucEstimateBundle.ESTIMATORS
    return ErrEstimateBundle.ESTIMATORS


def run_trial(config, trial):
    """One trial: returns ``(true_value, {estimator: value}, diagnostics)``."""
    data_rng, boot_rng, test_rng = trial_streams(config.seed, trial)
    data = gen_multinormal(config, data_rng)
    trainer = make_classifier(config.classifier)
    model = clone(trainer).fit(data.X, data.y)
    fits = ReplicateFits.draw(data, trainer, config.B, boot_rng)
    if config.metric == "auc":
        bundle = estimate_aucs(data, trainer, fits=fits, model=model)
    else:
        bundle = estimate_errors(data, trainer, threshold=config.threshold, fits=fits,
                                 model=model, loocv=False)
    truth = true_conditional_metric(model, config, test_rng)
    return truth, bundle.as_dict(), dict(bundle.diagnostics)


def _guarded(job):
    fn, config, trial = job
    try:
        return fn(config, trial)
    except Exception as exc:  # re-raised with the trial's seed
        raise TrialFailure(trial, config.seed, exc) from exc


def run_trials(fn, config, jobs=1):
    """Apply ``fn(config, trial)`` to every trial, in trial order."""
    work = [(fn, config, g) for g in range(config.trials)]
    if jobs is None or jobs <= 1:
        return [_guarded(w) for w in work]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_guarded, work, chunksize=max(1, len(work) // (4 * jobs))))


AGGREGATE_COLUMNS = ("estimator", "mean", "sd", "rms", "rms_around_mean", "corr",
                     "corr_degenerate", "trials")


@dataclass
class EstimatorSummary:
    estimator: str
    mean: float
    sd: float
    rms: float
    rms_around_mean: float
    corr: float
    corr_degenerate: bool
    trials: int

    def row(self):
        return [getattr(self, c) for c in AGGREGATE_COLUMNS]


def summarize(name, estimates, truth):
    """Aggregate one estimator's per-trial values against the truths.

    SDs use the ``1/G`` normalisation so that ``rms**2 == bias**2 +
    var(estimate - truth)`` holds exactly.
    """
    e = np.asarray(estimates, dtype=float)
    corr, degenerate = corr_coef(e, truth)
    return EstimatorSummary(name, float(e.mean()), float(e.std()), rms(e, truth),
                            rms_around_mean(e, truth), corr, degenerate, int(e.size))


@dataclass
class MCExperimentReport:
    """Per-trial truths and estimates of one experiment, with aggregates."""

    config: ExperimentConfig
    truth: np.ndarray
    estimates: dict
    diagnostics: list = field(default_factory=list)

    @property
    def trial_columns(self):
        return ["trial", "true", *self.estimates]

    def trial_rows(self):
        return [
            [g, float(self.truth[g]), *(float(v[g]) for v in self.estimates.values())]
            for g in range(self.truth.size)
        ]

    def summaries(self):
        out = [summarize("true", self.truth, self.truth)]
        out += [summarize(k, v, self.truth) for k, v in self.estimates.items()]
        return out

    def summary(self, name):
        source = self.truth if name == "true" else self.estimates[name]
        return summarize(name, source, self.truth)

    def aggregate_rows(self):
        return [s.row() for s in self.summaries()]


def run_mc_experiment(config, jobs=1):
    """Run ``config.trials`` trials and collect an :class:`MCExperimentReport`."""
    results = run_trials(run_trial, config, jobs)
    names = estimator_names(config.metric)
    truth = np.array([r[0] for r in results])
    estimates = {k: np.array([r[1][k] for r in results]) for k in names}
    return MCExperimentReport(config, truth, estimates, [r[2] for r in results])


def run_size_series(config, sizes, jobs=1):
    """One experiment per per-class training size; returns ``{n: report}``.

    Each size is seeded independently from ``(seed, n)``.
    """
    return {
        int(n): run_mc_experiment(replace(config.with_size(n), seed=_size_seed(config.seed, n)), jobs)
        for n in sizes
    }


def average_rms(reports):
    """Mean RMS of every estimator across several experiments."""
    reports = list(reports)
    names = ["true", *reports[0].estimates]
    return {k: float(np.mean([r.summary(k).rms for r in reports])) for k in names}


# Two-classifier comparison


def compare_trial(config, trial):
    """Both classifiers on the same data, replicates and test set."""
    data_rng, boot_rng, test_rng = trial_streams(config.seed, trial)
    data = gen_multinormal(config, data_rng)
    test_seed = test_rng.integers(2**63 - 1)
    boot_seed = boot_rng.integers(2**63 - 1)
    out = {}
    influences = []
    for tag, kind in (("1", config.classifier), ("2", config.classifier2)):
        trainer = make_classifier(kind)
        fits = ReplicateFits.draw(data, trainer, config.B, np.random.default_rng(boot_seed))
        model = clone(trainer).fit(data.X, data.y)
        bundle = estimate_aucs(data, trainer, fits=fits, model=model)
        U1, U2 = lpob_influence_derivative(fits)
        influences.append((U1, U2))
        out["true_" + tag] = true_conditional_metric(
            model, config, np.random.default_rng(test_seed), metric="auc")
        out["lpob_" + tag] = bundle.lpob_auc
        out["sd_hat_" + tag] = math.sqrt(two_sample_variance(U1, U2))
    (a1, a2), (b1, b2) = influences
    out["true_diff"] = out["true_1"] - out["true_2"]
    out["lpob_diff"] = out["lpob_1"] - out["lpob_2"]
    out["sd_hat_diff"] = math.sqrt(two_sample_variance(a1 - b1, a2 - b2))
    return out


COMPARISON_TRIAL_COLUMNS = ("trial", "true_1", "true_2", "true_diff", "lpob_1", "lpob_2",
                            "lpob_diff", "sd_hat_1", "sd_hat_2", "sd_hat_diff")
COMPARISON_SUMMARY_COLUMNS = ("quantity", "classifier_1", "classifier_2", "difference")


@dataclass
class ComparisonReport:
    """Per-trial LPOB estimates for two classifiers and their difference."""

    config: ExperimentConfig
    trials: list

    def column(self, name):
        return np.array([t[name] for t in self.trials])

    def trial_rows(self):
        return [[g, *(float(t[c]) for c in COMPARISON_TRIAL_COLUMNS[1:])]
                for g, t in enumerate(self.trials)]

    def summary_rows(self):
        """Mean and SD (over trials) of the truth, the LPOB estimate and its SD estimate."""
        rows = []
        for label, prefix, stat in (
            ("mean_true", "true", np.mean), ("sd_true", "true", np.std),
            ("mean_lpob", "lpob", np.mean), ("sd_lpob", "lpob", np.std),
            ("mean_sd_hat", "sd_hat", np.mean), ("sd_sd_hat", "sd_hat", np.std),
        ):
            rows.append([label, *(float(stat(self.column(f"{prefix}_{s}"))) for s in ("1", "2", "diff"))])
        return rows


def compare_classifiers(config, jobs=1):
    """LDA-vs-QDA style comparison through the LPOB estimator."""
    return ComparisonReport(config, run_trials(compare_trial, config, jobs))


# Support-size study


def support_trial(config, trial):
    """True AUC at the config's size, AUC* at the config's size."""
    data_rng, boot_rng, test_rng = trial_streams(config.seed, trial)
    data = gen_multinormal(config, data_rng)
    trainer = make_classifier(config.classifier)
    model = clone(trainer).fit(data.X, data.y)
    fits = ReplicateFits.draw(data, trainer, config.B, boot_rng)
    return true_conditional_metric(model, config, test_rng, "auc"), auc_star_from_fits(fits)[0]


SUPPORT_COLUMNS = ("n", "true_mean", "true_se", "n_632", "star_632_mean", "star_632_se",
                   "n_50", "star_50_mean", "star_50_se")


def _mean_se(values):
    v = np.asarray(values, dtype=float)
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0


def support_size_study(config, sizes=None, jobs=1):
    """True mean AUC at ``n`` against mean AUC* at ``ceil(n/.632)`` and ``ceil(n/.5)``.

    Each size is an independent experiment seeded by ``(seed, size)``.
    Returns rows matching ``SUPPORT_COLUMNS``.
    """
    sizes = config.sizes if sizes is None else tuple(sizes)
    cache = {}

    def at(n):
        if n not in cache:
            cfg = replace(config.with_size(n), seed=_size_seed(config.seed, n))
            res = run_trials(support_trial, cfg, jobs)
            cache[n] = (np.array([r[0] for r in res]), np.array([r[1] for r in res]))
        return cache[n]

    rows = []
    for n in sizes:
        n632 = math.ceil(n / 0.632)
        n50 = math.ceil(n / 0.5)
        true_m, true_se = _mean_se(at(n)[0])
        s632_m, s632_se = _mean_se(at(n632)[1])
        s50_m, s50_se = _mean_se(at(n50)[1])
        rows.append([n, true_m, true_se, n632, s632_m, s632_se, n50, s50_m, s50_se])
    return rows


def _size_seed(seed, n):
    return int(np.random.SeedSequence([seed, n]).generate_state(1, dtype=np.uint64)[0] >> 1)
