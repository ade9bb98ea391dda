"""Stratified bootstrap replicates, jackknife deletions and CV folds.

Every replicate keeps the class sizes of the original data: ``n1`` draws from
the class-1 cases and ``n2`` from the class-2 cases.  Alongside the drawn
indices each replicate records the inclusion count ``N_i`` of every original
case; a case is excluded (``I_i = 1``) exactly when ``N_i == 0``.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ._validation import (
    CLASS_1,
    CLASS_2,
    InvalidInputError,
    check_positive_int,
    check_random_state,
    check_X_y,
)

ORDERED = "ordered"
UNORDERED = "unordered"


class LabeledDataset:
    """Two-class feature matrix with labels in {1, 2}."""

    def __init__(self, X, y):
        self.X, self.y = check_X_y(X, y)
        self.X.setflags(write=False)
        self.y.setflags(write=False)

    def __repr__(self):
        return f"LabeledDataset(n1={self.n1}, n2={self.n2}, p={self.p})"

    def __len__(self):
        return self.n

    @property
    def n(self):
        return self.y.size

    @property
    def p(self):
        return self.X.shape[1]

    @cached_property
    def idx1(self):
        return np.flatnonzero(self.y == CLASS_1)

    @cached_property
    def idx2(self):
        return np.flatnonzero(self.y == CLASS_2)

    @property
    def n1(self):
        return self.idx1.size

    @property
    def n2(self):
        return self.idx2.size

    def class_indices(self, k):
        return self.idx1 if k == CLASS_1 else self.idx2

    def subset(self, indices):
        indices = np.asarray(indices, dtype=np.int64)
        return LabeledDataset(self.X[indices], self.y[indices])

    def with_case(self, i, x):
        """Copy with the feature vector of case ``i`` replaced by ``x``."""
        X = self.X.copy()
        X[i] = x
        return LabeledDataset(X, self.y)

    def require_both_classes(self, minimum=1):
        if self.n1 < minimum or self.n2 < minimum:
            raise InvalidInputError(
                f"each class needs >= {minimum} case(s), got n1={self.n1}, n2={self.n2}"
            )


@dataclass(frozen=True)
class BootstrapReplicate:
    """One stratified replicate: drawn indices and per-case inclusion counts."""

    indices: np.ndarray
    counts: np.ndarray

    @property
    def excluded(self):
        return self.counts == 0


class ReplicateSet:
    """``B`` replicates stored as ``(B, n)`` index and count matrices."""

    def __init__(self, indices, counts):
        self.indices = np.asarray(indices, dtype=np.int64)
        self.counts = np.asarray(counts, dtype=np.int64)
        if self.indices.ndim != 2 or self.counts.ndim != 2:
            raise InvalidInputError("replicate matrices must be 2-D")
        if self.indices.shape[0] != self.counts.shape[0]:
            raise InvalidInputError("indices and counts disagree on B")

    @classmethod
    def from_indices(cls, indices, n):
        indices = np.atleast_2d(np.asarray(indices, dtype=np.int64))
        return cls(indices, _counts(indices, n))

    def __len__(self):
        return self.indices.shape[0]

    def __getitem__(self, b):
        return BootstrapReplicate(self.indices[b], self.counts[b])

    def __iter__(self):
        return (self[b] for b in range(len(self)))

    @property
    def excluded(self):
        return self.counts == 0

    def append(self, other):
        return ReplicateSet(
            np.vstack([self.indices, other.indices]), np.vstack([self.counts, other.counts])
        )


def _counts(indices, n):
    B = indices.shape[0]
    counts = np.zeros((B, n), dtype=np.int64)
    np.add.at(counts, (np.repeat(np.arange(B), indices.shape[1]), indices.ravel()), 1)
    return counts


def _draw_ordered(pool, size, B, rng):
    return pool[rng.integers(0, pool.size, size=(B, size))]


def _draw_unordered(pool, size, B, rng):
    # a uniform size-k subset of the 2k-1 "stars and bars" slots is a uniform
    # multiset of size k; sorting an ordered draw would not be uniform
    k = pool.size
    slots = np.sort(np.argsort(rng.random((B, size + k - 1)), axis=1)[:, :size], axis=1)
    return pool[slots - np.arange(size)]


def bootstrap_replicates(data, B, random_state=None, mode=ORDERED):
    """Draw ``B`` stratified replicates of ``data``.

    ``mode='ordered'`` is ordinary sampling with replacement; ``'unordered'``
    draws each class's multiset uniformly among all multisets of that size.
    """
    data.require_both_classes()
    B = check_positive_int(B, "B")
    rng = check_random_state(random_state)
    if mode == ORDERED:
        draw = _draw_ordered
    elif mode == UNORDERED:
        draw = _draw_unordered
    else:
        raise InvalidInputError(f"mode must be 'ordered' or 'unordered', got {mode!r}")
    indices = np.hstack([
        draw(data.idx1, data.n1, B, rng),
        draw(data.idx2, data.n2, B, rng),
    ])
    return ReplicateSet(indices, _counts(indices, data.n))


def stratified_bootstrap(data, random_state=None):
    """One ordered stratified replicate."""
    return bootstrap_replicates(data, 1, random_state)[0]


def unordered_bootstrap(data, random_state=None):
    """One replicate drawn uniformly over per-class multisets."""
    return bootstrap_replicates(data, 1, random_state, mode=UNORDERED)[0]


def conditioned_replicate(data, exclude, random_state=None):
    """Stratified replicate drawn conditionally on leaving out ``exclude``.

    Each class is resampled from its cases minus the excluded ones, which is
    the exact conditional distribution of an ordinary replicate given that
    the listed cases were not drawn.
    """
    rng = check_random_state(random_state)
    exclude = np.asarray(list(exclude), dtype=np.int64)
    parts = []
    for pool, size in ((data.idx1, data.n1), (data.idx2, data.n2)):
        kept = np.setdiff1d(pool, exclude)
        if kept.size == 0:
            raise InvalidInputError("cannot exclude every case of a class")
        parts.append(_draw_ordered(kept, size, 1, rng))
    indices = np.hstack(parts)
    return ReplicateSet(indices, _counts(indices, data.n))


def appearance_probability(n, mode=ORDERED):
    """Probability that a given case appears in a size-``n`` replicate."""
    n = check_positive_int(n, "n")
    if mode == ORDERED:
        return 1.0 - (1.0 - 1.0 / n) ** n
    if mode == UNORDERED:
        return n / (2.0 * n - 1.0)
    raise InvalidInputError(f"mode must be 'ordered' or 'unordered', got {mode!r}")


def jackknife_samples(data):
    """The ``n`` leave-one-out datasets; the i-th omits case ``i``."""
    n = len(data)
    if n < 2:
        raise InvalidInputError("jackknife needs n >= 2")
    keep = ~np.eye(n, dtype=bool)
    if isinstance(data, LabeledDataset):
        return [data.subset(np.flatnonzero(row)) for row in keep]
    data = np.asarray(data)
    return [data[row] for row in keep]


@dataclass(frozen=True)
class FoldPlan:
    """Fold number for every case."""

    assignment: np.ndarray
    k: int

    def folds(self):
        return [np.flatnonzero(self.assignment == f) for f in range(self.k)]


def cv_folds(data, k, random_state=None):
    """Stratified ``k``-fold partition; ``k = n`` gives leave-one-out.

    Cases of each class are shuffled and dealt round-robin; class 2 continues
    the deal where class 1 stopped so overall fold sizes also stay within one.
    """
    n = len(data)
    if not isinstance(k, (int, np.integer)) or not 2 <= k <= n:
        raise InvalidInputError(f"k must be an integer in [2, {n}], got {k!r}")
    rng = check_random_state(random_state)
    assignment = np.empty(n, dtype=np.int64)
    start = 0
    for pool in (data.idx1, data.idx2):
        order = rng.permutation(pool)
        assignment[order] = (start + np.arange(order.size)) % k
        start = (start + order.size) % k
    return FoldPlan(assignment, int(k))
