"""Input validation helpers shared by the estimators."""

import numbers

import numpy as np

CLASS_1 = 1
CLASS_2 = 2


class InvalidInputError(ValueError):
    """Raised when inputs violate a documented precondition."""


class UndefinedEstimateError(ValueError):
    """Raised when an estimator is undefined for the given replicates."""


def check_random_state(random_state):
    """Turn ``None``, an int, a SeedSequence or a Generator into a Generator."""
    if isinstance(random_state, np.random.Generator):
        return random_state
    if random_state is None or isinstance(random_state, (numbers.Integral, np.random.SeedSequence)):
        return np.random.default_rng(random_state)
    raise InvalidInputError(f"cannot build a random generator from {random_state!r}")


def check_scores(scores, name="scores", allow_empty=False):
    arr = np.asarray(scores, dtype=float).ravel()
    if not allow_empty and arr.size == 0:
        raise InvalidInputError(f"{name} must contain at least one score")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} must be finite")
    return arr


def check_labels(y):
    y = np.asarray(y)
    if y.ndim != 1:
        raise InvalidInputError("labels must be one-dimensional")
    if y.size and not np.all(np.isin(y, (CLASS_1, CLASS_2))):
        bad = sorted(set(np.unique(y).tolist()) - {CLASS_1, CLASS_2})
        raise InvalidInputError(f"labels must be 1 or 2, got {bad}")
    return y.astype(np.int64)


def check_features(X, n_features=None):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2:
        raise InvalidInputError("features must be a 2-D array")
    if X.shape[1] < 1:
        raise InvalidInputError("need at least one feature column")
    if not np.all(np.isfinite(X)):
        raise InvalidInputError("features must be finite")
    if n_features is not None and X.shape[1] != n_features:
        raise InvalidInputError(
            f"expected {n_features} features, got {X.shape[1]}"
        )
    return X


def check_X_y(X, y):
    X = check_features(X)
    y = check_labels(y)
    if X.shape[0] != y.shape[0]:
        raise InvalidInputError(
            f"X has {X.shape[0]} rows but y has {y.shape[0]} labels"
        )
    return X, y


def check_positive_int(value, name, minimum=1):
    if not isinstance(value, numbers.Integral) or isinstance(value, bool) or value < minimum:
        raise InvalidInputError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)
