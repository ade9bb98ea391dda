import numpy as np
import pytest
from sklearn.base import BaseEstimator, clone

from bootauc._validation import InvalidInputError
from bootauc.auc_estimators import auc_star_from_fits, lpob_from_fits
from bootauc.bootstrap import ReplicateFits
from bootauc.discriminant import LinearDiscriminant
from bootauc.error_estimators import err_star_from_fits, loob_from_fits
from bootauc.smoothness import (
    PerturbationSweep,
    crossing_replicate,
    decision_surfaces,
    feature_sweep,
    mass_sweep,
    normalized_weights,
    perturbed_bootstrap_weight,
    perturbed_estimator_value,
    smoothness_metric,
)

from conftest import gaussian_data


class FirstFeature(BaseEstimator):
    def fit(self, X, y):
        self.cut_ = float(np.median(np.asarray(X)[:, 0]))
        return self

    def decision_function(self, X):
        return self.cut_ - np.asarray(X)[:, 0]


@pytest.fixture(scope="module")
def sweep_fits():
    data = gaussian_data(10, 10, p=2, shift=0.8, seed=11)
    return ReplicateFits.draw(data, LinearDiscriminant(), 60, 2, keep_models=True)


class TestWeights:
    def test_equal_at_zero(self):
        counts = np.array([0, 1, 2, 5])
        g = perturbed_bootstrap_weight(10, counts, 0.0)
        np.testing.assert_allclose(g, 10.0**-10)
        np.testing.assert_allclose(normalized_weights(10, counts, 0.0), 0.25)

    def test_two_sample_form(self):
        g = perturbed_bootstrap_weight(4, np.array([0, 2]), 0.0, n_other=3)
        np.testing.assert_allclose(g, 4.0**-4 * 3.0**-3)

    def test_multinomial_probability(self):
        # probability of drawing case i exactly N times times the orderings cancel:
        # (1-eps)^n (1 + n eps/(1-eps))^N / n^n = prod of perturbed masses
        n, eps, N = 5, 0.1, 2
        mass_i = (1 - eps) / n + eps
        mass_o = (1 - eps) / n
        expected = mass_i**N * mass_o ** (n - N)
        assert perturbed_bootstrap_weight(n, N, eps) == pytest.approx(expected)

    def test_deletion_epsilon_zeroes_containing_replicates(self):
        n = 8
        counts = np.array([0, 1, 0, 3])
        g = perturbed_bootstrap_weight(n, counts, -1.0 / (n - 1))
        assert g[1] == 0.0 and g[3] == 0.0
        assert g[0] > 0 and g[2] > 0
        np.testing.assert_allclose(normalized_weights(n, counts, -1.0 / (n - 1)), [0.5, 0, 0.5, 0])

    def test_normalized_sum(self):
        counts = np.random.default_rng(0).integers(0, 4, size=50)
        assert normalized_weights(20, counts, 0.03).sum() == pytest.approx(1.0)

    def test_out_of_range(self):
        with pytest.raises(InvalidInputError):
            perturbed_bootstrap_weight(5, 1, -0.5)


class TestPerturbedValue:
    def test_zero_epsilon_reproduces_estimators(self, sweep_fits):
        assert perturbed_estimator_value(sweep_fits, 3, 0.0, "err_star") == pytest.approx(
            err_star_from_fits(sweep_fits)[0], abs=1e-12)
        assert perturbed_estimator_value(sweep_fits, 3, 0.0, "loob") == pytest.approx(
            loob_from_fits(sweep_fits), abs=1e-12)
        assert perturbed_estimator_value(sweep_fits, 3, 0.0, "auc_star") == pytest.approx(
            auc_star_from_fits(sweep_fits)[0], abs=1e-12)
        assert perturbed_estimator_value(sweep_fits, 14, 0.0, "lpob") == pytest.approx(
            lpob_from_fits(sweep_fits), abs=1e-12)

    def test_continuous_in_epsilon(self, sweep_fits):
        eps = np.linspace(-0.02, 0.02, 21)
        sweep = mass_sweep(sweep_fits, 2, eps, metrics=("err_star", "loob", "auc_star", "lpob"))
        for name in ("err_star", "loob", "auc_star", "lpob"):
            assert smoothness_metric(sweep.curves[name]).max_jump < 0.01, name

    def test_unknown_metric(self, sweep_fits):
        with pytest.raises(InvalidInputError):
            perturbed_estimator_value(sweep_fits, 0, 0.0, "median")


class TestFeatureSweep:
    def test_single_component_steps(self, sweep_fits):
        data = sweep_fits.data
        sweep = feature_sweep(data, LinearDiscriminant(), 0, 0, fits=sweep_fits)
        b0 = sweep.component_replicate
        n_out = sweep_fits.excluded[b0].sum()
        jumps = np.abs(np.diff(sweep.curves["single_component"]))
        jumps = jumps[jumps > 0]
        assert jumps.size >= 1
        np.testing.assert_allclose(jumps * n_out, np.round(jumps * n_out), atol=1e-9)
        assert jumps.min() >= 1.0 / n_out - 1e-12

    def test_frozen_replicates_at_original_value(self, sweep_fits):
        data = sweep_fits.data
        grid = np.sort(np.r_[data.X[0, 1], data.X[0, 1] + 0.5])
        sweep = feature_sweep(data, LinearDiscriminant(), 0, 1, grid, fits=sweep_fits,
                              include_auc=True)
        k = int(np.flatnonzero(grid == data.X[0, 1])[0])
        assert sweep.curves["err_star"][k] == pytest.approx(err_star_from_fits(sweep_fits)[0])
        assert sweep.curves["loob"][k] == pytest.approx(loob_from_fits(sweep_fits))
        assert sweep.curves["auc_star"][k] == pytest.approx(auc_star_from_fits(sweep_fits)[0])
        assert sweep.curves["lpob"][k] == pytest.approx(lpob_from_fits(sweep_fits))

    def test_cached_models_match_retraining(self, sweep_fits):
        data = sweep_fits.data
        x = data.X[4].copy()
        x[0] += 1.3
        sweep = feature_sweep(data, LinearDiscriminant(), 4, 0, [x[0]], fits=sweep_fits)
        moved = data.with_case(4, x)
        fresh = ReplicateFits(moved, LinearDiscriminant(), sweep_fits.replicates,
                              sweep_fits.supplement_seed)
        assert sweep.curves["err_star"][0] == pytest.approx(err_star_from_fits(fresh)[0], abs=1e-12)
        assert sweep.curves["loob"][0] == pytest.approx(loob_from_fits(fresh), abs=1e-12)

    def test_irrelevant_coordinate_is_flat(self):
        data = gaussian_data(10, 10, p=2, seed=5)
        sweep = feature_sweep(data, FirstFeature(), 1, 1, B=40, random_state=0, include_auc=True)
        for name, curve in sweep.curves.items():
            assert smoothness_metric(curve).max_jump == 0.0, name

    def test_crossing_replicate_prefers_crossed_surface(self, sweep_fits):
        data = sweep_fits.data
        path = np.tile(data.X[0], (30, 1))
        path[:, 0] = np.linspace(-6, 6, 30)
        b = crossing_replicate(sweep_fits, 0, path)
        assert sweep_fits.excluded[b, 0]
        loss = sweep_fits.models[b].decision_function(path) > 0
        assert loss.min() != loss.max()

    def test_validation(self, sweep_fits):
        data = sweep_fits.data
        with pytest.raises(InvalidInputError):
            feature_sweep(data, LinearDiscriminant(), 99, 0, fits=sweep_fits)
        with pytest.raises(InvalidInputError):
            feature_sweep(data, LinearDiscriminant(), 0, 5, fits=sweep_fits)
        with pytest.raises(InvalidInputError):
            feature_sweep(data, LinearDiscriminant(), 0, 0, [0.0, np.inf], fits=sweep_fits)
        with pytest.raises(InvalidInputError):
            feature_sweep(data, LinearDiscriminant(), 0, 0, [1.0, 0.0], fits=sweep_fits)
        no_models = ReplicateFits.draw(data, LinearDiscriminant(), 5, 0)
        with pytest.raises(InvalidInputError):
            feature_sweep(data, LinearDiscriminant(), 0, 0, fits=no_models)

    def test_rows_match_columns(self, sweep_fits):
        sweep = feature_sweep(sweep_fits.data, LinearDiscriminant(), 0, 0,
                              np.linspace(-1, 1, 5), fits=sweep_fits)
        assert sweep.columns == ["grid_value", "single_component", "err_star", "loob"]
        assert all(len(r) == 4 for r in sweep.rows())


class TestMetricAndSurfaces:
    def test_metric_examples(self):
        assert smoothness_metric(np.zeros(10)).max_jump == 0.0
        step = smoothness_metric(np.r_[np.zeros(5), np.ones(5)], threshold=0.5)
        assert (step.max_jump, step.jump_count) == (1.0, 1)
        curve = np.linspace(0, 2, 41) ** 2
        assert smoothness_metric(curve).max_jump <= 4.0 / 40 * 2
        assert smoothness_metric(np.array([1.0])).max_jump == 0.0

    def test_metric_from_sweep_column(self):
        sweep = PerturbationSweep(0, "mass", [0, 1, 2], {"a": np.array([0.0, 0.5, 0.4])})
        assert smoothness_metric((sweep, "a")).max_jump == 0.5

    def test_surfaces(self, sweep_fits):
        data = sweep_fits.data
        rows = decision_surfaces(data, LinearDiscriminant(), sweep_fits, k=3)
        assert [r[0] for r in rows] == ["full", "replicate_0", "replicate_1", "replicate_2"]
        full = clone(LinearDiscriminant()).fit(data.X, data.y)
        np.testing.assert_allclose(rows[0][1:], [full.intercept_, *full.coef_])
        np.testing.assert_allclose(rows[1][2:], sweep_fits.models[0].coef_)
