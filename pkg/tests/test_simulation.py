import math
from dataclasses import replace

import numpy as np
import pytest
from scipy.stats import norm

from bootauc._validation import InvalidInputError
from bootauc.simulation import (
    AGGREGATE_COLUMNS,
    COMPARISON_TRIAL_COLUMNS,
    SUPPORT_COLUMNS,
    ExperimentConfig,
    TrialFailure,
    average_rms,
    bayes_auc,
    bayes_error,
    compare_classifiers,
    corr_coef,
    gen_multinormal,
    rms,
    rms_around_mean,
    run_mc_experiment,
    run_size_series,
    run_trials,
    summarize,
    support_size_study,
    true_conditional_metric,
)

TINY = ExperimentConfig(p=2, n1=8, n2=8, trials=6, B=20, test_size=200, seed=3)


class BayesDirection:
    """Scores by the projection on the class-mean difference (class 1 high)."""

    def decision_function(self, X):
        return -np.asarray(X).sum(axis=1)


class TestConfig:
    def test_defaults(self):
        cfg = ExperimentConfig()
        assert (cfg.p, cfg.n1, cfg.delta, cfg.trials, cfg.B, cfg.test_size) == (5, 20, 0.8, 200, 100,
                                                                                1000)

    def test_shift(self):
        assert ExperimentConfig(p=5, delta=0.8).shift == pytest.approx(0.35777, abs=1e-5)
        assert ExperimentConfig(c=0.5).shift == 0.5

    @pytest.mark.parametrize("field,value", [
        ("p", 0), ("n1", -1), ("trials", 0), ("B", 1.5), ("delta", -0.1), ("metric", "f1"),
        ("classifier", "svm"), ("seed", -2), ("sizes", (1,)), ("c", float("nan")),
    ])
    def test_invalid_field_named(self, field, value):
        with pytest.raises(InvalidInputError, match=field):
            ExperimentConfig(**{field: value})

    def test_dict_roundtrip(self):
        cfg = ExperimentConfig(sizes=(10, 30))
        assert ExperimentConfig(**cfg.to_dict()) == cfg


class TestDataAndTruth:
    def test_zero_separation(self):
        cfg = ExperimentConfig(delta=0.0)
        assert cfg.shift == 0.0
        assert bayes_auc(0.0) == 0.5
        data = gen_multinormal(cfg, np.random.default_rng(0))
        assert data.n1 == 20 and data.n2 == 20 and data.p == 5

    def test_mean_difference(self):
        cfg = ExperimentConfig(p=5, delta=0.8)
        data = gen_multinormal(cfg, np.random.default_rng(1), 10_000, 10_000)
        diff = data.X[data.idx2].mean(axis=0) - data.X[data.idx1].mean(axis=0)
        se = math.sqrt(2 / 10_000)
        assert np.all(np.abs(diff - cfg.shift) < 3 * se)

    def test_perfect_separation(self):
        cfg = ExperimentConfig(p=2, delta=40.0)
        assert true_conditional_metric(BayesDirection(), cfg, np.random.default_rng(0)) == 1.0

    def test_bayes_direction_auc(self):
        cfg = ExperimentConfig(p=5, delta=0.8)
        value = true_conditional_metric(BayesDirection(), cfg, np.random.default_rng(2))
        assert value == pytest.approx(norm.cdf(0.8 / math.sqrt(2)), abs=0.02)
        assert bayes_auc(0.8) == pytest.approx(0.7142, abs=1e-4)

    def test_bayes_error(self):
        cfg = ExperimentConfig(p=5, delta=0.8, metric="error")
        value = true_conditional_metric(BayesDirection(), cfg, np.random.default_rng(3))
        assert value == pytest.approx(bayes_error(0.8), abs=0.03)

    def test_pseudo_infinite_stability(self):
        cfg = ExperimentConfig(p=5, delta=0.8)
        a = true_conditional_metric(BayesDirection(), cfg, np.random.default_rng(4))
        b = true_conditional_metric(BayesDirection(), cfg, np.random.default_rng(5))
        assert abs(a - b) <= 0.03


class TestAggregates:
    def test_identity(self):
        t = np.array([0.6, 0.7, 0.65])
        s = summarize("x", t, t)
        assert s.rms == 0.0 and s.corr == pytest.approx(1.0) and not s.corr_degenerate

    def test_constant_estimator(self):
        assert corr_coef([0.5, 0.5, 0.5], [0.1, 0.2, 0.3]) == (0.0, True)

    def test_three_trial_hand_values(self):
        e, t = [0.7, 0.6, 0.8], [0.65, 0.6, 0.7]
        assert rms(e, t) == pytest.approx(math.sqrt((0.05**2 + 0 + 0.1**2) / 3))
        assert rms_around_mean(e, t) == pytest.approx(
            math.sqrt(((0.7 - 0.65) ** 2 + 0.05**2 + 0.15**2) / 3))
        assert corr_coef(e, t)[0] == pytest.approx(np.corrcoef(e, t)[0, 1])

    def test_decomposition(self):
        rng = np.random.default_rng(0)
        t = rng.uniform(0.5, 0.8, 200)
        e = t + rng.normal(0.02, 0.05, 200)
        d = e - t
        assert rms(e, t) ** 2 == pytest.approx(d.mean() ** 2 + d.var(), abs=1e-10)


class TestExperiments:
    def test_columns_and_determinism(self):
        a = run_mc_experiment(TINY)
        b = run_mc_experiment(TINY, jobs=2)
        assert a.trial_rows() == b.trial_rows()
        assert a.aggregate_rows() == b.aggregate_rows()
        assert a.trial_columns == ["trial", "true", "apparent_auc", "sb_auc", "auc_star",
                                   "dot632_auc", "dot632plus_auc", "lpob_auc"]
        assert all(len(r) == len(AGGREGATE_COLUMNS) for r in a.aggregate_rows())

    def test_error_metric(self):
        report = run_mc_experiment(replace(TINY, metric="error"))
        assert "dot632plus" in report.estimates
        assert all(0 <= v <= 1 for v in report.truth)

    def test_no_separation_means_half(self):
        report = run_mc_experiment(replace(TINY, delta=0.0, trials=30, n1=15, n2=15))
        for name in ("auc_star", "lpob_auc", "dot632plus_auc"):
            assert report.summary(name).mean == pytest.approx(0.5, abs=0.06)
        assert report.summary("true").mean == pytest.approx(0.5, abs=0.02)

    def test_trial_failure_carries_index_and_seed(self):
        def fails_on_two(config, trial):
            if trial == 2:
                raise ValueError("boom")
            return trial

        with pytest.raises(TrialFailure, match=r"trial 2 failed \(seed=3") as info:
            run_trials(fails_on_two, TINY)
        assert info.value.trial == 2 and info.value.seed == 3

    def test_size_series_and_average(self):
        reports = run_size_series(replace(TINY, trials=3), (6, 9))
        assert set(reports) == {6, 9}
        assert reports[9].config.n1 == 9 and reports[6].config.seed != reports[9].config.seed
        avg = average_rms(reports.values())
        expected = np.mean([r.summary("auc_star").rms for r in reports.values()])
        assert avg["auc_star"] == pytest.approx(expected)


class TestComparison:
    def test_identical_kinds(self):
        report = compare_classifiers(replace(TINY, classifier2="lda"))
        np.testing.assert_array_equal(report.column("lpob_diff"), 0.0)
        np.testing.assert_array_equal(report.column("true_diff"), 0.0)
        assert np.all(report.column("sd_hat_diff") == 0.0)

    def test_difference_definitional(self):
        report = compare_classifiers(TINY)
        for t in report.trials:
            assert t["lpob_diff"] == t["lpob_1"] - t["lpob_2"]
            assert t["true_diff"] == t["true_1"] - t["true_2"]
        assert all(len(r) == len(COMPARISON_TRIAL_COLUMNS) for r in report.trial_rows())
        labels = [r[0] for r in report.summary_rows()]
        assert labels == ["mean_true", "sd_true", "mean_lpob", "sd_lpob", "mean_sd_hat", "sd_sd_hat"]


class TestSupportStudy:
    def test_columns_and_sizes(self):
        rows = support_size_study(replace(TINY, trials=3), sizes=(10,))
        assert len(rows[0]) == len(SUPPORT_COLUMNS)
        assert rows[0][0] == 10 and rows[0][3] == 16 and rows[0][6] == 20

    def test_no_separation(self):
        rows = support_size_study(replace(TINY, delta=0.0, trials=20), sizes=(8,))
        n, true_m, _, _, s632, _, _, s50, _ = rows[0]
        for value in (true_m, s632, s50):
            assert value == pytest.approx(0.5, abs=0.06)

    def test_true_auc_grows_with_n(self):
        cfg = ExperimentConfig(p=5, delta=0.8, trials=60, B=10, seed=1)
        rows = support_size_study(cfg, sizes=(10, 40))
        assert rows[1][1] >= rows[0][1] - 2 * math.hypot(rows[0][2], rows[1][2])
