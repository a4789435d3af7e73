"""Extreme learning machine: random sigmoid features, ridge output solve."""

from __future__ import annotations

import numpy as np
from scipy.special import expit
from sklearn.base import BaseEstimator, ClassifierMixin

from ..validation import SpecError, as_matrix

HIDDEN_GRID = (100, 500, 1000)


class ElmClassifier(BaseEstimator, ClassifierMixin):
    """Single hidden layer with seeded uniform [-1, 1] weights.

    Training solves one regularized least-squares problem against one-hot
    targets; the hidden layer is never updated.  Ties in the output scores
    resolve to the lowest class index.
    """

    def __init__(self, hidden=500, seed=0, ridge=1e-3):
        self.hidden = hidden
        self.seed = seed
        self.ridge = ridge

    def _activations(self, X):
        return expit(X @ self.input_weights_.T + self.biases_)

    def fit(self, X, y):
        X = as_matrix(X, "elm input")
        y = np.asarray(y)
        if y.shape != (X.shape[0],):
            raise SpecError(
                f"labels must be 1-D of length {X.shape[0]}, got {y.shape}"
            )
        self.classes_ = np.unique(y)
        if self.classes_.size < 2:
            raise SpecError(
                f"need at least 2 classes to train, got {self.classes_.size}"
            )
        if self.hidden < 1:
            raise SpecError(f"hidden unit count must be >= 1, got {self.hidden}")
        rng = np.random.default_rng(self.seed)
        d = X.shape[1]
        self.input_weights_ = rng.uniform(-1.0, 1.0, (self.hidden, d))
        self.biases_ = rng.uniform(-1.0, 1.0, self.hidden)
        A = self._activations(X)
        targets = (y[:, None] == self.classes_[None, :]).astype(np.float64)
        gram = A.T @ A
        if self.ridge:
            gram = gram + self.ridge * np.eye(self.hidden)
        try:
            self.output_weights_ = np.linalg.solve(gram, A.T @ targets)
        except np.linalg.LinAlgError as e:
            raise SpecError(f"singular hidden-layer system: {e}") from e
        return self

    def decision_function(self, X):
        X = as_matrix(X, "elm input")
        if X.shape[1] != self.input_weights_.shape[1]:
            raise SpecError(
                f"classifier expects {self.input_weights_.shape[1]} features, "
                f"got {X.shape[1]}"
            )
        return self._activations(X) @ self.output_weights_

    def predict(self, X):
        scores = self.decision_function(X)
        return self.classes_[np.argmax(scores, axis=1)]


def select_hidden(X, y, grid=HIDDEN_GRID, seed=0, ridge=1e-3, val_fraction=0.25):
    """Pick the grid size with the best held-out accuracy (ties: smaller H)."""
    X = as_matrix(X, "elm input")
    y = np.asarray(y)
    rng = np.random.default_rng(seed)
    n = X.shape[0]
    n_val = max(1, int(round(n * val_fraction)))
    if n - n_val < 2:
        raise SpecError(f"too few samples ({n}) for a validation split")
    perm = rng.permutation(n)
    val, train = perm[:n_val], perm[n_val:]
    if np.unique(y[train]).size < 2:
        raise SpecError("validation split left fewer than 2 training classes")
    best_h, best_acc = None, -1.0
    for h in grid:
        clf = ElmClassifier(hidden=h, seed=seed, ridge=ridge)
        clf.fit(X[train], y[train])
        acc = float(np.mean(clf.predict(X[val]) == y[val]))
        if acc > best_acc:
            best_h, best_acc = h, acc
    return best_h
