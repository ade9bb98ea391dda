import numpy as np
import pytest
from sklearn.base import BaseEstimator

from bootauc.bootstrap import ReplicateFits
from bootauc.discriminant import LinearDiscriminant
from bootauc.resampling import LabeledDataset


def gaussian_data(n1=20, n2=20, p=2, shift=0.8, seed=0):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.standard_normal((n1, p)), rng.standard_normal((n2, p)) + shift])
    y = np.r_[np.ones(n1, int), np.full(n2, 2)]
    return LabeledDataset(X, y)


class ConstantRule(BaseEstimator):
    """Scores every case by a fixed linear map, ignoring the training data."""

    def __init__(self, w=1.0):
        self.w = w

    def fit(self, X, y):
        return self

    def decision_function(self, X):
        return -self.w * np.asarray(X, dtype=float)[:, 0]


@pytest.fixture
def small_data():
    return gaussian_data(10, 10, p=2, shift=1.0, seed=1)


@pytest.fixture
def medium_data():
    return gaussian_data(20, 20, p=2, shift=0.8, seed=2)


@pytest.fixture
def lda():
    return LinearDiscriminant()


@pytest.fixture
def medium_fits(medium_data, lda):
    return ReplicateFits.draw(medium_data, lda, 100, 3)
