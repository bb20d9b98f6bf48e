"""Shared domain types: series, windows, anomaly ranges and label helpers."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


class ValidationError(ValueError):
    """Raised when an input violates a type invariant."""


def _finite_matrix(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValidationError(f"{name}: expected a 1-D or 2-D array, got ndim={arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name}: values must be finite")
    return arr


@dataclass(frozen=True)
class TimeSeries:
    """An ordered ``n x d`` sequence of real observations."""

    values: np.ndarray
    name: str = "series"

    def __post_init__(self):
        arr = _finite_matrix(self.values, self.name)
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValidationError(f"{self.name}: empty series")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def __len__(self) -> int:
        return self.n

    def slice(self, start: int, stop: int, name: str | None = None) -> "TimeSeries":
        return TimeSeries(self.values[start:stop], name or self.name)


class WindowSelector(str, enum.Enum):
    FIXED = "fixed"
    ACF = "acf"
    FFT = "fft"


@dataclass(frozen=True)
class WindowConfig:
    """Sliding-window settings.

    ``length`` is only authoritative for the ``fixed`` selector; ``acf`` and
    ``fft`` configs are resolved against a training series with
    :func:`tsasd.preprocess.resolve_window`.
    """

    length: int = 64
    stride: int = 1
    selector: WindowSelector = WindowSelector.FIXED

    def __post_init__(self):
        object.__setattr__(self, "selector", WindowSelector(self.selector))
        if int(self.length) < 1:
            raise ValidationError("window length must be positive")
        if int(self.stride) < 1:
            raise ValidationError("window stride must be positive")
        object.__setattr__(self, "length", int(self.length))
        object.__setattr__(self, "stride", int(self.stride))

    def n_windows(self, n: int) -> int:
        if self.length > n:
            raise ValidationError(f"window length {self.length} exceeds series length {n}")
        return (n - self.length) // self.stride + 1

    @property
    def tag(self) -> str:
        if self.selector is WindowSelector.FIXED:
            return f"w{self.length}"
        return self.selector.value

    @classmethod
    def parse(cls, text) -> "WindowConfig":
        """Parse ``"64"``, ``"acf"`` or ``"fft"``."""
        if isinstance(text, WindowConfig):
            return text
        text = str(text).strip().lower()
        if text in ("acf", "fft"):
            return cls(selector=WindowSelector(text))
        try:
            return cls(length=int(text))
        except ValueError:
            raise ValidationError(f"unrecognised window spec {text!r}") from None


@dataclass(frozen=True)
class WindowMatrix:
    rows: np.ndarray
    config: WindowConfig
    source_len: int
    n_dims: int = 1

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        if rows.ndim != 2:
            raise ValidationError("window rows must be 2-D")
        if rows.shape[0] != self.config.n_windows(self.source_len):
            raise ValidationError("row count does not match window config")
        if not np.all(np.isfinite(rows)):
            raise ValidationError("window rows must be finite")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    def __len__(self) -> int:
        return self.rows.shape[0]


@dataclass(frozen=True, order=True)
class AnomalyRange:
    """Inclusive index range ``[start, end]``."""

    start: int
    end: int

    def __post_init__(self):
        if self.start < 0 or self.end < self.start:
            raise ValidationError(f"invalid range [{self.start}, {self.end}]")

    def __len__(self) -> int:
        return self.end - self.start + 1


def as_scores(scores, length: int | None = None) -> np.ndarray:
    arr = np.asarray(scores, dtype=float).ravel()
    if length is not None and arr.shape[0] != length:
        raise ValidationError(f"expected {length} scores, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("scores must be finite")
    return arr


def as_labels(labels, length: int | None = None) -> np.ndarray:
    arr = np.asarray(labels).ravel()
    if length is not None and arr.shape[0] != length:
        raise ValidationError(f"expected {length} labels, got {arr.shape[0]}")
    if arr.size and not np.all((arr == 0) | (arr == 1)):
        raise ValidationError("labels must be 0/1")
    return arr.astype(np.int8)


def ranges_to_labels(ranges: Iterable[AnomalyRange], n: int) -> np.ndarray:
    labels = np.zeros(n, dtype=np.int8)
    for r in ranges:
        if r.end >= n:
            raise ValidationError(f"range [{r.start}, {r.end}] outside series of length {n}")
        labels[r.start : r.end + 1] = 1
    return labels


def labels_to_ranges(labels) -> list[AnomalyRange]:
    """Maximal runs of ones as sorted, disjoint ranges."""
    lab = as_labels(labels)
    if lab.size == 0:
        return []
    padded = np.concatenate(([0], lab, [0])).astype(np.int8)
    edges = np.diff(padded)
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1) - 1
    return [AnomalyRange(int(s), int(e)) for s, e in zip(starts, ends)]


def check_ranges(ranges: Sequence[AnomalyRange], n: int) -> None:
    prev_end = -1
    for r in ranges:
        if r.start <= prev_end:
            raise ValidationError("ranges must be sorted and disjoint")
        if r.end >= n:
            raise ValidationError(f"range [{r.start}, {r.end}] outside series of length {n}")
        prev_end = r.end
