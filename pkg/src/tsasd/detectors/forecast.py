"""Forecast-style detectors."""
from __future__ import annotations

import numpy as np

from .base import FORECAST, Detector, ridge_solve, target_columns


class LinearRegression(Detector):
    """Predict each window's final time step from the preceding ones.

    The score is the Euclidean norm of the prediction error and is attributed
    to the predicted (last) point when de-windowing.
    """

    name = "LinearRegression"
    family = FORECAST
    anchor = "last"

    def min_rows(self):
        return 2

    def _fit(self, X):
        self.tgt_ = target_columns(X.shape[1], self.n_dims)
        self.pred_ = np.setdiff1d(np.arange(X.shape[1]), self.tgt_)
        self.coef_ = ridge_solve(self._design(X), X[:, self.tgt_])

    def _design(self, X):
        return np.column_stack([np.ones(X.shape[0]), X[:, self.pred_]])

    def _score(self, X):
        return np.linalg.norm(X[:, self.tgt_] - self._design(X) @ self.coef_, axis=1)
