"""Health indicators from de-windowed scores.

The decision function is a one-sided Gaussian tail transform::

    D(a) = max(2 * (erf((a - mu - sigma) / (sqrt(2) * sigma)) - 0.5), 0)

with ``mu``/``sigma`` the mean and population standard deviation of the
validation scores.  A point is flagged when ``D(a) >= T`` where
``T = 1 - (1 - erf(2 / sqrt(2))) / 2``, i.e. the standard normal CDF at 2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from .core import ValidationError, as_scores

SIGMA_FLOOR = 1e-12


def default_threshold() -> float:
    return 1.0 - (1.0 - math.erf(2.0 / math.sqrt(2.0))) / 2.0


@dataclass(frozen=True)
class DecisionModel:
    mu: float
    sigma: float
    threshold: float = default_threshold()

    def __post_init__(self):
        if not (self.sigma > 0 and math.isfinite(self.sigma) and math.isfinite(self.mu)):
            raise ValidationError("decision model needs finite mu and sigma > 0")

    def __call__(self, a_hat):
        return decide(self, a_hat)


def learn_decision(validation_scores, threshold: float | None = None) -> DecisionModel:
    a = as_scores(validation_scores)
    if a.size == 0:
        raise ValidationError("no validation scores")
    mu = float(a.mean())
    sigma = max(float(a.std()), SIGMA_FLOOR)
    return DecisionModel(mu, sigma, default_threshold() if threshold is None else float(threshold))


def decide(model: DecisionModel, a_hat):
    """Health indicator in [0, 1]; scalar in, scalar out."""
    z = (np.asarray(a_hat, dtype=float) - model.mu - model.sigma) / (math.sqrt(2.0) * model.sigma)
    h = np.maximum((erf(z) - 0.5) * 2.0, 0.0)
    return float(h) if h.ndim == 0 else h


def health_series(model: DecisionModel, scores):
    """Return ``(health, labels)``; ties at the threshold count as anomalies."""
    a = as_scores(scores)
    h = decide(model, a)
    return h, (h >= model.threshold).astype(np.int8)
