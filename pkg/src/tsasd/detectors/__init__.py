"""Window-level anomaly detectors.

Every detector follows ``fit(train_windows) -> score(query_windows)``, with
larger scores meaning more anomalous.  Importing this package registers the
full classical catalog.
"""
from .base import (
    FORECAST,
    PROXIMITY,
    RECONSTRUCTION,
    REGISTRY,
    STATISTICAL,
    Detector,
    DetectorError,
    DetectorSpec,
    family,
    fit,
    score,
)
from . import proximity, statistical, forecast  # noqa: F401  (registration)

CATALOG_ORDER = (
    "KNN", "LOF", "Sampling", "SOS", "KDE", "GMM", "KMeans", "CBLOF", "COF", "HBOS", "IForest",
    "INNE", "LODA", "COPOD", "ECOD", "ABOD", "QMCD", "MAD", "MSD", "MCD", "PCA", "CD", "SOD",
    "LinearRegression",
)


def list_catalog() -> list[DetectorSpec]:
    """Default-parameter specs for every catalog detector, in a fixed order."""
    return [DetectorSpec(name, dict(REGISTRY[name].defaults)) for name in CATALOG_ORDER]


__all__ = [
    "CATALOG_ORDER",
    "Detector",
    "DetectorError",
    "DetectorSpec",
    "FORECAST",
    "PROXIMITY",
    "RECONSTRUCTION",
    "REGISTRY",
    "STATISTICAL",
    "family",
    "fit",
    "list_catalog",
    "score",
]
