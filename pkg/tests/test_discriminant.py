import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import norm

from bootauc._validation import InvalidInputError
from bootauc.discriminant import (
    LinearDiscriminant,
    QuadraticDiscriminant,
    make_classifier,
    score,
    train,
)
from bootauc.metrics import auc_from_scores
from bootauc.resampling import LabeledDataset

from conftest import gaussian_data


@pytest.fixture
def two_point_data():
    return LabeledDataset([[0.0], [0.0], [1.0], [1.0]], [2, 2, 1, 1])


class TestTraining:
    def test_boundary_at_midpoint(self, two_point_data):
        model = train(two_point_data, "lda")
        assert score(model, np.array([0.5])) == pytest.approx(0.0, abs=1e-12)

    def test_class1_mean_scores_higher(self):
        data = gaussian_data(30, 30, p=3, seed=4)
        model = train(data, "lda")
        assert score(model, model.means_[0]) > score(model, model.means_[1])

    def test_identical_classes_give_chance_auc(self):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((50, 2))
        data = LabeledDataset(np.vstack([X, X]), np.r_[np.ones(50, int), np.full(50, 2)])
        for kind in ("lda", "qda"):
            model = train(data, kind)
            assert auc_from_scores(model.decision_function(data.X), data.y) == 0.5

    def test_large_sample_auc_near_bayes(self):
        # equal-covariance Gaussians: Bayes AUC is Phi(delta / sqrt 2)
        delta, p = 0.8, 5
        rng = np.random.default_rng(11)
        c = delta / np.sqrt(p)
        X = np.vstack([rng.standard_normal((200, p)), rng.standard_normal((200, p)) + c])
        y = np.r_[np.ones(200, int), np.full(200, 2)]
        model = LinearDiscriminant().fit(X, y)
        T = np.vstack([rng.standard_normal((20000, p)), rng.standard_normal((20000, p)) + c])
        ty = np.r_[np.ones(20000, int), np.full(20000, 2)]
        assert auc_from_scores(model.decision_function(T), ty) == pytest.approx(
            norm.cdf(delta / np.sqrt(2)), abs=0.03)

    def test_apparent_auc_from_batch_scores(self):
        data = gaussian_data(15, 12, p=2, seed=5)
        model = train(data)
        brute = np.mean([
            (a > b) + 0.5 * (a == b)
            for a in model.decision_function(data.X[data.idx1])
            for b in model.decision_function(data.X[data.idx2])
        ])
        assert auc_from_scores(model.decision_function(data.X), data.y) == pytest.approx(brute)

    def test_qda_needs_two_per_class(self):
        with pytest.raises(InvalidInputError, match="n1=1"):
            QuadraticDiscriminant().fit([[0.0], [1.0], [1.2]], [1, 2, 2])

    def test_lda_singleton_class_uses_pooled_covariance(self):
        model = LinearDiscriminant().fit([[0.0], [1.0], [1.2]], [1, 2, 2])
        assert np.isfinite(model.coef_).all()

    def test_missing_class_rejected(self):
        for kind in ("lda", "qda"):
            with pytest.raises(InvalidInputError):
                make_classifier(kind).fit([[0.0], [1.0], [2.0]], [1, 1, 1])

    def test_unknown_kind(self):
        with pytest.raises(InvalidInputError):
            make_classifier("knn")

    def test_ridge_on_duplicated_rows(self):
        X = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 1.0], [1.0, 1.0]])
        model = LinearDiscriminant().fit(X, [1, 1, 2, 2])
        assert model.ridge_ > 0
        assert np.all(np.linalg.eigvalsh(model.covariance_) > 0)
        q = QuadraticDiscriminant().fit(X, [1, 1, 2, 2])
        assert np.all(q.ridge_ > 0)

    def test_well_conditioned_no_ridge(self):
        model = train(gaussian_data(20, 20, p=3, seed=6))
        assert model.ridge_ == 0.0
        np.testing.assert_allclose(model.covariance_, model.covariance_.T)

    def test_deterministic(self):
        data = gaussian_data(20, 20, p=3, seed=7)
        a, b = train(data, "qda"), train(data, "qda")
        assert a.to_json() == b.to_json()


class TestScoring:
    def test_dimension_mismatch(self):
        model = train(gaussian_data(10, 10, p=2))
        with pytest.raises(InvalidInputError):
            score(model, np.zeros(3))
        with pytest.raises(InvalidInputError):
            model.decision_function(np.zeros((2, 3)))

    @given(st.floats(-1, 2), st.integers(0, 10_000))
    @settings(max_examples=50, deadline=None)
    def test_lda_affine(self, alpha, seed):
        model = train(gaussian_data(10, 10, p=3, seed=3))
        rng = np.random.default_rng(seed)
        x, z = rng.standard_normal((2, 3))
        lhs = score(model, alpha * x + (1 - alpha) * z)
        rhs = alpha * score(model, x) + (1 - alpha) * score(model, z)
        assert lhs == pytest.approx(rhs, abs=1e-9)

    def test_label_exchange_reverses_auc(self):
        data = gaussian_data(20, 20, p=2, seed=8)
        flipped = 3 - data.y
        a = auc_from_scores(train(data).decision_function(data.X), data.y)
        b_model = LinearDiscriminant().fit(data.X, flipped)
        b = auc_from_scores(b_model.decision_function(data.X), data.y)
        assert b == pytest.approx(1 - a, abs=1e-12)

    def test_predict_matches_sign(self):
        data = gaussian_data(10, 10, p=2)
        model = train(data, "qda")
        s = model.decision_function(data.X)
        np.testing.assert_array_equal(model.predict(data.X), np.where(s > 0, 1, 2))

    def test_serialization_roundtrip(self):
        model = train(gaussian_data(10, 10, p=2))
        doc = json.loads(model.to_json())
        assert doc["kind"] == "lda"
        np.testing.assert_allclose(doc["coef_"], model.coef_)
