"""Per-feature linear rescaling to [-1, 1] with train-range clipping."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ..validation import SpecError, as_matrix


class SymmetricMinMaxScaler(BaseEstimator, TransformerMixin):
    """Map the training min/max of each feature to -1/+1.

    Constant features map to 0.  Transformed data is clipped to [-1, 1],
    so test values outside the training range saturate instead of leaking
    out-of-range magnitudes into the classifier.
    """

    def fit(self, X, y=None):
        X = as_matrix(X, "scaler input")
        self.min_ = X.min(axis=0)
        self.max_ = X.max(axis=0)
        return self

    def transform(self, X):
        X = as_matrix(X, "scaler input")
        if X.shape[1] != self.min_.size:
            raise SpecError(
                f"scaler expects {self.min_.size} features, got {X.shape[1]}"
            )
        span = self.max_ - self.min_
        out = np.zeros_like(X)
        ok = span > 0
        out[:, ok] = 2.0 * (X[:, ok] - self.min_[ok]) / span[ok] - 1.0
        return np.clip(out, -1.0, 1.0)
