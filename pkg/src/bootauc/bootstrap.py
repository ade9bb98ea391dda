"""Train a scoring rule on every replicate and keep its scores on the data.

All bootstrap estimators are functions of the ``(B, n)`` matrix of scores
that each replicate's model assigns to the original cases, plus the
replicates' inclusion counts.  Computing that matrix once lets several
estimators share the same replicates.
"""

import numpy as np
from sklearn.base import clone

from ._validation import check_random_state
from .resampling import ReplicateSet, bootstrap_replicates, conditioned_replicate


def fit_score(trainer, train_data, test_X):
    """Fit a clone of ``trainer`` on ``train_data`` and score ``test_X``."""
    model = clone(trainer).fit(train_data.X, train_data.y)
    return model, model.decision_function(test_X)


class ReplicateFits:
    """Replicate models' scores on the original cases.

    Parameters
    ----------
    data : LabeledDataset
    trainer : estimator
        Unfitted sklearn-style estimator with ``fit(X, y)`` and a
        ``decision_function`` that is higher for class 1.  It is cloned for
        every replicate.
    replicates : ReplicateSet
    supplement_seed : int, optional
        Seeds the conditioned replicates drawn when some case (or pair) is
        left out by none of ``replicates``.
    keep_models : bool, default=False
        Keep the fitted replicate models (needed for feature sweeps).
    """

    def __init__(self, data, trainer, replicates, supplement_seed=0, keep_models=False,
                 scores=None, models=None):
        self.data = data
        self.trainer = trainer
        self.replicates = replicates
        self.supplement_seed = int(supplement_seed)
        self.models = models
        if scores is None:
            fitted = [fit_score(trainer, data.subset(idx), data.X) for idx in replicates.indices]
            scores = np.vstack([s for _, s in fitted]) if fitted else np.empty((0, data.n))
            if keep_models:
                self.models = [m for m, _ in fitted]
        self.scores = scores
        self.n_supplements = 0

    @classmethod
    def draw(cls, data, trainer, B, random_state=None, **kwargs):
        """Draw ``B`` stratified replicates and fit them."""
        rng = check_random_state(random_state)
        replicates = bootstrap_replicates(data, B, rng)
        seed = int(rng.integers(2**63 - 1))
        return cls(data, trainer, replicates, supplement_seed=seed, **kwargs)

    @property
    def B(self):
        return len(self.replicates)

    @property
    def counts(self):
        return self.replicates.counts

    @property
    def excluded(self):
        return self.replicates.counts == 0

    def with_data(self, data, scores):
        """Same replicates and supplement seed, new data and score matrix."""
        out = ReplicateFits(
            data, self.trainer, self.replicates, self.supplement_seed,
            scores=scores, models=self.models,
        )
        return out

    def conditioned(self, exclude):
        """Counts and scores of a replicate drawn to leave out ``exclude``.

        The draw is seeded by the supplement seed and the excluded indices, so
        it does not depend on the order in which supplements are requested.
        """
        exclude = sorted(int(i) for i in exclude)
        rng = np.random.default_rng([self.supplement_seed, *exclude])
        rep = conditioned_replicate(self.data, exclude, rng)
        _, s = fit_score(self.trainer, self.data.subset(rep.indices[0]), self.data.X)
        self.n_supplements += 1
        return rep.counts[0], s


def draw_fits(data, trainer, B, random_state=None, **kwargs):
    return ReplicateFits.draw(data, trainer, B, random_state, **kwargs)


def identity_replicates(data, B=1):
    """``B`` copies of the original sample, useful for degenerate checks."""
    idx = np.tile(np.concatenate([data.idx1, data.idx2]), (B, 1))
    return ReplicateSet.from_indices(idx, data.n)
