"""Principal-component projection with a deterministic sign convention."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ..validation import SpecError, as_matrix


class PrincipalComponents(BaseEstimator, TransformerMixin):
    """Top-k eigenvectors of the population covariance.

    The requested k must not exceed min(n_samples, n_features); callers that
    want a cap apply it themselves.  Each component is oriented so its
    largest-magnitude entry is positive, which makes fitted models comparable
    across runs.
    """

    def __init__(self, n_components=30):
        self.n_components = n_components

    def fit(self, X, y=None):
        X = as_matrix(X, "pca input")
        n, d = X.shape
        if n < 2:
            raise SpecError(f"PCA needs at least 2 samples, got {n}")
        k = self.n_components
        if not 1 <= k <= min(n, d):
            raise SpecError(
                f"PCA components must satisfy 1 <= k <= min(n={n}, d={d}), got {k}"
            )
        self.mean_ = X.mean(axis=0)
        centered = X - self.mean_
        if d <= n:
            cov = centered.T @ centered / n
            evals, evecs = np.linalg.eigh(cov)
            order = np.argsort(evals)[::-1][:k]
            comps = evecs[:, order].T
            evals = evals[order]
        else:
            # wide data: the n x n Gram problem shares the covariance
            # spectrum, and components recover as X^T v / sqrt(n * lambda)
            gram = centered @ centered.T / n
            evals, evecs = np.linalg.eigh(gram)
            order = np.argsort(evals)[::-1][:k]
            evals = evals[order]
            if evals[-1] <= 0:
                raise SpecError(
                    f"PCA rank too low for k={k}: top eigenvalues {evals}"
                )
            comps = (centered.T @ evecs[:, order]
                     / np.sqrt(n * evals)).T
        # orient: largest-|entry| coordinate positive
        for row in comps:
            j = np.argmax(np.abs(row))
            if row[j] < 0:
                row *= -1.0
        self.components_ = comps
        self.explained_variance_ = np.maximum(evals, 0.0)
        return self

    def transform(self, X):
        X = as_matrix(X, "pca input")
        if X.shape[1] != self.mean_.size:
            raise SpecError(
                f"PCA expects {self.mean_.size} features, got {X.shape[1]}"
            )
        return (X - self.mean_) @ self.components_.T

    def inverse_transform(self, Z):
        Z = as_matrix(Z, "pca scores")
        return Z @ self.components_ + self.mean_
