"""Build anomaly-state datasets from categorical (classification) series.

A class of a classification dataset is clustered under SBD, its most
concentrated cluster becomes the baseline, and instances from other classes
are injected whole into the second half of the baseline to form the test
series.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from .core import AnomalyRange, TimeSeries, ValidationError, ranges_to_labels
from .shapedist import most_concentrated_cluster, sbd_kmeans, sbd_matrix

WAVEFORMS = ("sine", "square", "sawtooth", "chirp")


@dataclass(frozen=True)
class CategoricalDataset:
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        y = np.asarray(self.y).astype(int).ravel()
        if X.shape[0] != y.shape[0]:
            raise ValidationError("instances and labels differ in count")
        if not np.all(np.isfinite(X)):
            raise ValidationError("instances must be finite")
        if np.unique(y).size < 2:
            raise ValidationError("need at least two classes")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def m(self) -> int:
        return self.X.shape[1]

    @property
    def classes(self) -> np.ndarray:
        return np.unique(self.y)


@dataclass
class DatasetBundle:
    standard: TimeSeries
    test: TimeSeries
    truth: list[AnomalyRange]
    meta: dict = field(default_factory=dict)

    @property
    def labels(self) -> np.ndarray:
        return ranges_to_labels(self.truth, self.test.n)

    @property
    def name(self) -> str:
        return self.meta.get("name", "bundle")


def _waveform(kind: str, cycles: int, m: int) -> np.ndarray:
    t = np.arange(m) / m
    phase = 2 * np.pi * cycles * t
    if kind == "sine":
        return np.sin(phase)
    if kind == "square":
        return signal.square(phase)
    if kind == "sawtooth":
        return signal.sawtooth(phase)
    if kind == "chirp":
        return signal.chirp(t, f0=1.0, t1=1.0, f1=float(cycles + 2), method="linear")
    raise ValueError(kind)


def class_waveform(c: int, m: int) -> np.ndarray:
    """Noise-free template for class ``c``: family cycles through sine/square/sawtooth/chirp."""
    kind = WAVEFORMS[c % len(WAVEFORMS)]
    cycles = 2 + c
    amplitude = 1.0 + 0.25 * (c % 3)
    return amplitude * _waveform(kind, cycles, m)


def generate_synthetic_categorical(
    n_classes: int = 6,
    per_class: int = 100,
    m: int = 64,
    noise_sigma: float = 0.1,
    seed: int = 0,
    *,
    amplitude_jitter: float = 0.0,
    shift_jitter: float = 0.0,
) -> CategoricalDataset:
    """Class templates plus i.i.d. Gaussian noise, deterministic per seed.

    Optional per-instance variation: each instance is scaled by
    ``1 + U(-amplitude_jitter, amplitude_jitter)`` and circularly shifted by
    up to ``shift_jitter * m`` samples before noise is added.  With both
    jitters at zero, ``noise_sigma=0`` gives identical instances per class.
    """
    if n_classes < 2:
        raise ValidationError("need at least two classes")
    if per_class < 1 or m < 2:
        raise ValidationError("per_class must be >= 1 and m >= 2")
    rng = np.random.default_rng(seed)
    X = np.empty((n_classes * per_class, m))
    y = np.repeat(np.arange(n_classes), per_class)
    max_shift = int(round(shift_jitter * m))
    for c in range(n_classes):
        base = class_waveform(c, m)
        for i in range(per_class):
            scale = 1.0 + rng.uniform(-amplitude_jitter, amplitude_jitter)
            s = int(rng.integers(-max_shift, max_shift + 1)) if max_shift else 0
            X[c * per_class + i] = scale * np.roll(base, s) + noise_sigma * rng.standard_normal(m)
    return CategoricalDataset(X, y)


def read_categorical_csv(path) -> CategoricalDataset:
    """Read a UCR-style file: one instance per line, class label first.

    Comma, tab or whitespace separated; a non-numeric first line is treated
    as a header.
    """
    rows, labels = [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            try:
                vals = [float(v) for v in parts]
            except ValueError:
                if lineno == 1:
                    continue
                raise ValidationError(f"{path}:{lineno}: non-numeric value") from None
            labels.append(int(round(vals[0])))
            rows.append(vals[1:])
    if len({len(r) for r in rows}) != 1:
        raise ValidationError(f"{path}: instances have unequal lengths")
    return CategoricalDataset(np.array(rows), np.array(labels))


def default_anomaly_count(n_test_normal: int) -> int:
    return max(1, math.ceil(0.1 * n_test_normal))


def build_bundle(
    data: CategoricalDataset,
    k: int,
    n_clusters: int = 3,
    anomaly_count: int | None = None,
    distance_band: tuple[float, float] = (0.25, 0.75),
    seed: int = 0,
    name: str | None = None,
    min_cluster_size: int = 4,
) -> DatasetBundle:
    """Construct a standard/test pair from class ``k`` of ``data``.

    The most concentrated SBD cluster of class ``k`` with at least
    ``min_cluster_size`` members (four by default, so each half keeps two) is shuffled and split; the first
    ``ceil(n/2)`` instances form the standard series.  Non-``k`` instances
    whose mean SBD to the baseline lies inside the quantile ``distance_band``
    are inserted at random instance boundaries of the second half.
    """
    rng = np.random.default_rng(seed)
    own = np.flatnonzero(data.y == k)
    other = np.flatnonzero(data.y != k)
    if own.size < 4:
        raise ValidationError(f"class {k} has {own.size} instances; need at least 4")
    if other.size == 0:
        raise ValidationError("no instances outside the source class")
    clustering = sbd_kmeans(data.X[own], min(n_clusters, own.size), seed=seed)
    chosen = most_concentrated_cluster(clustering, min_size=max(4, int(min_cluster_size)))
    baseline = own[clustering.members(chosen)]
    baseline = baseline[rng.permutation(baseline.size)]
    half = math.ceil(baseline.size / 2)
    standard_ids, test_normal = baseline[:half], baseline[half:]
    if standard_ids.size < 2 or test_normal.size < 2:
        raise ValidationError(f"baseline cluster too small ({baseline.size} instances)")

    mean_dist = sbd_matrix(data.X[other], data.X[baseline]).mean(axis=1)
    q_lo, q_hi = distance_band
    if not 0.0 <= q_lo <= q_hi <= 1.0:
        raise ValidationError(f"invalid distance band {distance_band}")
    lo, hi = np.quantile(mean_dist, [q_lo, q_hi])
    eligible = other[(mean_dist >= lo) & (mean_dist <= hi)]
    if anomaly_count is None:
        anomaly_count = default_anomaly_count(test_normal.size)
    if anomaly_count > eligible.size:
        raise ValidationError(
            f"only {eligible.size} candidate anomalies in band {distance_band}, need {anomaly_count}"
        )
    anomalies = rng.choice(eligible, anomaly_count, replace=False) if anomaly_count else np.array([], int)
    total = test_normal.size + anomaly_count
    positions = np.sort(rng.choice(total, anomaly_count, replace=False)) if anomaly_count else np.array([], int)

    order = []
    normals = iter(test_normal.tolist())
    ano_iter = iter(anomalies.tolist())
    pos_set = set(positions.tolist())
    for slot in range(total):
        order.append(next(ano_iter) if slot in pos_set else next(normals))

    m = data.m
    standard = TimeSeries(data.X[standard_ids].ravel(), "standard")
    test = TimeSeries(data.X[order].ravel(), "test")
    truth = [AnomalyRange(int(p) * m, int(p) * m + m - 1) for p in positions]
    meta = {
        "name": name or f"class{k}_seed{seed}",
        "source_class": int(k),
        "chosen_cluster": int(chosen),
        "n_clusters": int(n_clusters),
        "instance_length": int(m),
        "distance_band": [float(q_lo), float(q_hi)],
        "seed": int(seed),
        "standard_ids": [int(i) for i in standard_ids],
        "test_ids": [int(i) for i in order],
        "anomaly_ids": [int(i) for i in anomalies],
        "anomaly_positions": [int(p) for p in positions],
        "knc": None,
    }
    return DatasetBundle(standard, test, truth, meta)


def quality_filter(results: dict, floor: float = 0.8) -> bool:
    """Keep a bundle unless every detector's AUC-ROC is below ``floor``.

    ``results`` maps detector id to AUC-ROC; ``None`` entries are ignored.
    """
    if not results:
        raise ValidationError("no detector results")
    vals = [v for v in results.values() if v is not None]
    return bool(vals) and max(vals) >= floor
