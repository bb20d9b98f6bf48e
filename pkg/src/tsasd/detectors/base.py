"""Detector interface, specs and the catalog registry."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, ClassVar

import numpy as np
from scipy.spatial.distance import cdist

from ..core import ValidationError, WindowMatrix

PROXIMITY = "proximity-based"
STATISTICAL = "statistical-model-based"
FORECAST = "forecast-based"
RECONSTRUCTION = "reconstruction-based"

REGISTRY: dict[str, type["Detector"]] = {}


class DetectorError(RuntimeError):
    """A detector could not be fitted or applied."""


@dataclass(frozen=True)
class DetectorSpec:
    id: str
    params: dict[str, Any] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.id not in REGISTRY:
            raise ValidationError(f"unknown detector {self.id!r}")
        cls = REGISTRY[self.id]
        unknown = set(self.params) - set(cls.defaults)
        if unknown:
            raise ValidationError(f"{self.id}: unknown hyperparameters {sorted(unknown)}")
        for key, value in self.params.items():
            lo, hi = cls.bounds.get(key, (None, None))
            if (lo is not None and value < lo) or (hi is not None and value > hi):
                raise ValidationError(f"{self.id}: {key}={value} outside [{lo}, {hi}]")
        object.__setattr__(self, "params", dict(self.params))

    @property
    def resolved(self) -> dict[str, Any]:
        return {**REGISTRY[self.id].defaults, **self.params}


class Detector:
    """Fit on standard windows, then score arbitrary windows (higher = more anomalous).

    Subclasses implement ``_fit`` and ``_score`` on plain 2-D arrays.  A fitted
    detector must not be mutated by ``score``.
    """

    name: ClassVar[str] = ""
    family: ClassVar[str] = PROXIMITY
    defaults: ClassVar[dict[str, Any]] = {}
    bounds: ClassVar[dict[str, tuple]] = {}
    # "last" attributes a window's score to its final point when de-windowing
    anchor: ClassVar[str] = "window"

    def __init__(self, seed: int = 0, **params):
        unknown = set(params) - set(self.defaults)
        if unknown:
            raise ValidationError(f"{self.name}: unknown hyperparameters {sorted(unknown)}")
        self.seed = int(seed)
        self.params = {**self.defaults, **params}
        self.n_dims = 1
        self.dim_ = None

    def __init_subclass__(cls, **kwargs):
        super().__init_subclass__(**kwargs)
        if cls.name:
            REGISTRY[cls.name] = cls

    def min_rows(self) -> int:
        return 1

    def fit(self, X, n_dims: int = 1) -> "Detector":
        X = _rows(X)
        if X.shape[0] < self.min_rows():
            raise DetectorError(f"{self.name} needs at least {self.min_rows()} training windows, got {X.shape[0]}")
        if X.shape[1] % n_dims:
            raise ValidationError("row width is not a multiple of n_dims")
        self.n_dims = int(n_dims)
        self.dim_ = X.shape[1]
        self._fit(X)
        return self

    def score(self, X) -> np.ndarray:
        if self.dim_ is None:
            raise DetectorError(f"{self.name} is not fitted")
        X = _rows(X)
        if X.shape[1] != self.dim_:
            raise ValidationError(f"{self.name}: query width {X.shape[1]} != fit width {self.dim_}")
        out = np.asarray(self._score(X), dtype=float).ravel()
        if not np.all(np.isfinite(out)):
            raise DetectorError(f"{self.name} produced non-finite scores")
        return out

    def _fit(self, X: np.ndarray) -> None:
        raise NotImplementedError

    def _score(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.params.items())
        return f"{type(self).__name__}({args}, seed={self.seed})"


def _rows(X) -> np.ndarray:
    if isinstance(X, WindowMatrix):
        X = X.rows
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2:
        raise ValidationError("expected a 2-D array of windows")
    return X


# ---------------------------------------------------------------------------
# shared numerics


def pairwise(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return cdist(A, B, "euclidean")


def knn(query: np.ndarray, ref: np.ndarray, k: int, exclude_self: bool = False):
    """Distances and indices of the ``k`` nearest rows of ``ref``, ascending."""
    D = pairwise(query, ref)
    if exclude_self:
        np.fill_diagonal(D, np.inf)
    k = min(k, ref.shape[0] - int(exclude_self))
    idx = np.argpartition(D, k - 1, axis=1)[:, :k]
    d = np.take_along_axis(D, idx, axis=1)
    order = np.argsort(d, axis=1, kind="stable")
    return np.take_along_axis(d, order, axis=1), np.take_along_axis(idx, order, axis=1)


def chunks(n: int, size: int):
    for start in range(0, n, size):
        yield slice(start, min(start + size, n))


def target_columns(width: int, n_dims: int) -> np.ndarray:
    """Indices of the final time step of every dimension in a flattened window."""
    w = width // n_dims
    return np.arange(1, n_dims + 1) * w - 1


def ridge_solve(A: np.ndarray, B: np.ndarray, rel: float = 1e-8) -> np.ndarray:
    """Least squares with a small relative ridge, robust to collinear columns."""
    G = A.T @ A
    lam = rel * max(np.trace(G) / G.shape[0], 1.0)
    return np.linalg.solve(G + lam * np.eye(G.shape[0]), A.T @ B)


def fit(spec: DetectorSpec, train) -> Detector:
    """Build the detector for ``spec`` and fit it on ``train`` windows."""
    n_dims = train.n_dims if isinstance(train, WindowMatrix) else 1
    det = REGISTRY[spec.id](seed=spec.seed, **spec.params)
    return det.fit(train, n_dims=n_dims)


def score(det: Detector, query) -> np.ndarray:
    return det.score(query)


def family(detector_id: str) -> str:
    return REGISTRY[detector_id].family

