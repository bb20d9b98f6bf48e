"""Train on a standard series, then score and label test series."""
from __future__ import annotations

import math
import pickle
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import detectors
from .core import TimeSeries, ValidationError, WindowConfig
from .decision import DecisionModel, health_series, learn_decision
from .detectors import DetectorSpec
from .preprocess import Normalizer, apply_normalizer, dewindow, extract_windows, fit_normalizer, resolve_window

FORMAT_VERSION = 1


@dataclass(frozen=True)
class PipelineConfig:
    window: WindowConfig = field(default_factory=WindowConfig)
    detector: DetectorSpec = field(default_factory=lambda: DetectorSpec("KNN"))
    split_fraction: float = 0.7
    seed: int = 0
    threshold: float | None = None

    def __post_init__(self):
        if not 0.0 < self.split_fraction < 1.0:
            raise ValidationError("split_fraction must lie in (0, 1)")


@dataclass(frozen=True)
class TrainedPipeline:
    normalizer: Normalizer
    window: WindowConfig
    detector: detectors.Detector
    decision: DecisionModel
    validation_scores: np.ndarray
    n_dims: int

    def save(self, path) -> None:
        payload = {"format": "tsasd.pipeline", "version": FORMAT_VERSION, "pipeline": self}
        tmp = Path(str(path) + ".tmp")
        with open(tmp, "wb") as fh:
            pickle.dump(payload, fh, protocol=pickle.HIGHEST_PROTOCOL)
        tmp.replace(path)

    @staticmethod
    def load(path) -> "TrainedPipeline":
        with open(path, "rb") as fh:
            payload = pickle.load(fh)
        if not isinstance(payload, dict) or payload.get("format") != "tsasd.pipeline":
            raise ValidationError(f"{path} is not a saved pipeline")
        if payload["version"] != FORMAT_VERSION:
            raise ValidationError(f"unsupported pipeline format version {payload['version']}")
        return payload["pipeline"]


def split_standard(standard: TimeSeries, fraction: float) -> tuple[TimeSeries, TimeSeries]:
    """Contiguous split: the first ``floor(fraction * n)`` points train, the rest validate."""
    n1 = int(math.floor(fraction * standard.n))
    if n1 < 1 or n1 >= standard.n:
        raise ValidationError(f"split {fraction} leaves an empty part of a length-{standard.n} series")
    return standard.slice(0, n1, "train"), standard.slice(n1, standard.n, "validation")


def _score_points(det: detectors.Detector, series: TimeSeries, window: WindowConfig) -> np.ndarray:
    if series.n < window.length:
        raise ValidationError(f"series of length {series.n} is shorter than the window ({window.length})")
    windows = extract_windows(series, window)
    return dewindow(det.score(windows), window, series.n, anchor=det.anchor)


def train(standard: TimeSeries, cfg: PipelineConfig) -> TrainedPipeline:
    x_train, x_val = split_standard(standard, cfg.split_fraction)
    norm = fit_normalizer(x_train)
    y_train_series = apply_normalizer(norm, x_train)
    y_val_series = apply_normalizer(norm, x_val)
    window = resolve_window(cfg.window, y_train_series)
    for part in (y_train_series, y_val_series):
        if part.n < window.length:
            raise ValidationError(
                f"{part.name} part has {part.n} points, fewer than the window length {window.length}"
            )
    spec = DetectorSpec(cfg.detector.id, cfg.detector.params, cfg.detector.seed)
    det = detectors.fit(spec, extract_windows(y_train_series, window))
    val_scores = _score_points(det, y_val_series, window)
    decision = learn_decision(val_scores, cfg.threshold)
    return TrainedPipeline(norm, window, det, decision, val_scores, standard.d)


def test(tp: TrainedPipeline, series: TimeSeries):
    """Return ``(aligned_scores, health, labels)``, each of length ``series.n``."""
    if series.d != tp.n_dims:
        raise ValidationError(f"test series has {series.d} dimensions, pipeline expects {tp.n_dims}")
    scores = _score_points(tp.detector, apply_normalizer(tp.normalizer, series), tp.window)
    health, labels = health_series(tp.decision, scores)
    return scores, health, labels


test.__test__ = False  # not a pytest test when imported into test modules


def run(standard: TimeSeries, test_series: TimeSeries, cfg: PipelineConfig):
    return test(train(standard, cfg), test_series)
