"""Gaussian discriminant scoring rules (LDA and QDA).

Both rules are binary with labels in {1, 2} and produce a scalar score that
grows with the log-likelihood ratio of class 1 over class 2, so a score above
0 means class 1 under count-based priors.
"""

import json

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import CLASS_1, CLASS_2, InvalidInputError, check_features, check_X_y


def _regularize(cov, ridge_scale, eig_tol):
    """Add ``ridge_scale * trace / p`` to the diagonal when ``cov`` is near-singular."""
    p = cov.shape[0]
    cov = (cov + cov.T) / 2.0
    if np.linalg.eigvalsh(cov)[0] >= eig_tol:
        return cov, 0.0
    lam = ridge_scale * np.trace(cov) / p
    if lam <= 0.0:
        # degenerate sample (all rows equal): fall back to an absolute ridge
        lam = ridge_scale
    return cov + lam * np.eye(p), lam


def _split_classes(X, y, min_per_class):
    X1, X2 = X[y == CLASS_1], X[y == CLASS_2]
    if min(len(X1), len(X2)) < min_per_class or len(X) < 3:
        raise InvalidInputError(
            f"each class needs >= {min_per_class} case(s) and n >= 3 to train, "
            f"got n1={len(X1)}, n2={len(X2)}"
        )
    return X1, X2


class _GaussianDiscriminant(ClassifierMixin, BaseEstimator):
    _min_per_class = 2

    def __init__(self, ridge_scale=1e-6, eig_tol=1e-8):
        self.ridge_scale = ridge_scale
        self.eig_tol = eig_tol

    def predict(self, X):
        """Class 1 where the score is positive, class 2 otherwise."""
        return np.where(self.decision_function(X) > 0.0, CLASS_1, CLASS_2)

    def _check_X(self, X):
        check_is_fitted(self, "means_")
        return check_features(X, n_features=self.n_features_in_)

    def _fit_common(self, X, y):
        X, y = check_X_y(X, y)
        X1, X2 = _split_classes(X, y, self._min_per_class)
        self.classes_ = np.array([CLASS_1, CLASS_2])
        self.n_features_in_ = X.shape[1]
        self.means_ = np.vstack([X1.mean(axis=0), X2.mean(axis=0)])
        self.priors_ = np.array([len(X1), len(X2)], dtype=float) / len(X)
        return X1 - self.means_[0], X2 - self.means_[1]

    def to_dict(self):
        """Fitted parameters as plain Python types."""
        check_is_fitted(self, "means_")
        out = {"kind": self.kind, "params": self.get_params()}
        for name in self._serialized:
            out[name] = np.asarray(getattr(self, name)).tolist()
        return out

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)


class LinearDiscriminant(_GaussianDiscriminant):
    """Two-class LDA with a pooled covariance matrix.

    Parameters
    ----------
    ridge_scale : float, default=1e-6
        A ridge ``ridge_scale * trace(S) / p`` is added to the pooled covariance
        ``S`` when its smallest eigenvalue falls below ``eig_tol``.
    eig_tol : float, default=1e-8

    Attributes
    ----------
    coef_ : ndarray of shape (p,)
        ``S^{-1} (mu1 - mu2)``.
    intercept_ : float
        ``-0.5 (mu1 + mu2)' coef_ + log(p1 / p2)``.
    """

    kind = "lda"
    _serialized = ("means_", "priors_", "covariance_", "ridge_", "coef_", "intercept_")
    # the pooled covariance only needs n - 2 >= 1 degrees of freedom
    _min_per_class = 1

    def fit(self, X, y):
        C1, C2 = self._fit_common(X, y)
        n = len(C1) + len(C2)
        pooled = (C1.T @ C1 + C2.T @ C2) / (n - 2)
        self.covariance_, self.ridge_ = _regularize(pooled, self.ridge_scale, self.eig_tol)
        diff = self.means_[0] - self.means_[1]
        self.coef_ = np.linalg.solve(self.covariance_, diff)
        self.intercept_ = float(
            -0.5 * (self.means_[0] + self.means_[1]) @ self.coef_
            + np.log(self.priors_[0] / self.priors_[1])
        )
        return self

    def decision_function(self, X):
        X = self._check_X(X)
        return X @ self.coef_ + self.intercept_


class QuadraticDiscriminant(_GaussianDiscriminant):
    """Two-class QDA: Gaussian log-likelihood ratio with per-class covariances."""

    kind = "qda"
    _serialized = ("means_", "priors_", "covariances_", "ridge_")

    def fit(self, X, y):
        centered = self._fit_common(X, y)
        covs, ridges, chols, logdets = [], [], [], []
        for C in centered:
            cov, lam = _regularize(C.T @ C / (len(C) - 1), self.ridge_scale, self.eig_tol)
            L = np.linalg.cholesky(cov)
            covs.append(cov)
            ridges.append(lam)
            chols.append(L)
            logdets.append(2.0 * np.sum(np.log(np.diag(L))))
        self.covariances_ = np.stack(covs)
        self.ridge_ = np.array(ridges)
        self._chol = chols
        self._logdet = np.array(logdets)
        return self

    def _log_density(self, X, k):
        # up to the shared -p/2 log(2 pi) constant
        z = np.linalg.solve(self._chol[k], (X - self.means_[k]).T)
        return -0.5 * np.sum(z * z, axis=0) - 0.5 * self._logdet[k]

    def decision_function(self, X):
        X = self._check_X(X)
        return (
            self._log_density(X, 0)
            - self._log_density(X, 1)
            + np.log(self.priors_[0] / self.priors_[1])
        )


_KINDS = {"lda": LinearDiscriminant, "qda": QuadraticDiscriminant}


def make_classifier(kind="lda", **params):
    """Unfitted discriminant of the named kind ('lda' or 'qda')."""
    try:
        cls = _KINDS[str(kind).lower()]
    except KeyError:
        raise InvalidInputError(f"unknown classifier kind {kind!r}; expected 'lda' or 'qda'") from None
    return cls(**params)


def train(data, kind="lda"):
    """Fit a discriminant of ``kind`` on a LabeledDataset."""
    return make_classifier(kind).fit(data.X, data.y)


def score(model, x):
    """Score of a single feature vector."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise InvalidInputError("score() takes one feature vector; use decision_function for batches")
    if x.shape[0] != model.n_features_in_:
        raise InvalidInputError(
            f"feature vector has {x.shape[0]} entries, model expects {model.n_features_in_}"
        )
    return float(model.decision_function(x[None, :])[0])
