"""Normalisation, sliding windows, window-length selection and de-windowing."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .core import TimeSeries, ValidationError, WindowConfig, WindowMatrix, WindowSelector, as_scores

FALLBACK_WINDOW = 64
ACF_PEAK_FLOOR = 0.1


@dataclass(frozen=True)
class Normalizer:
    min: np.ndarray
    max: np.ndarray

    def __call__(self, series: TimeSeries) -> TimeSeries:
        return apply_normalizer(self, series)


def fit_normalizer(series: TimeSeries) -> Normalizer:
    return Normalizer(series.values.min(axis=0), series.values.max(axis=0))


def apply_normalizer(norm: Normalizer, series: TimeSeries) -> TimeSeries:
    """Min-max scale with the fitted bounds; values are not clipped."""
    if series.d != norm.min.shape[0]:
        raise ValidationError(f"dimension mismatch: normalizer has {norm.min.shape[0]}, series has {series.d}")
    span = norm.max - norm.min
    safe = np.where(span > 0, span, 1.0)
    out = np.where(span > 0, (series.values - norm.min) / safe, 0.0)
    return TimeSeries(out, series.name)


def extract_windows(series: TimeSeries, cfg: WindowConfig) -> WindowMatrix:
    """Row ``k`` holds points ``k*s .. k*s+w-1``, flattened one dimension at a time."""
    w, s = cfg.length, cfg.stride
    if w > series.n:
        raise ValidationError(f"window length {w} exceeds series length {series.n}")
    # (n-w+1, d, w): each window laid out dimension-major
    view = sliding_window_view(series.values, w, axis=0)[::s]
    rows = view.reshape(view.shape[0], -1)
    return WindowMatrix(np.ascontiguousarray(rows), cfg, series.n, series.d)


def _first_dim(series: TimeSeries, min_len: int = 4) -> np.ndarray:
    if series.n < min_len:
        raise ValidationError(f"series too short for window selection (n={series.n})")
    return series.values[:, 0]


def acf_window_length(series: TimeSeries, max_lag: int = 256) -> int:
    """Lag of the highest autocorrelation peak (lag >= 2).

    A peak must exceed both 0.1 and ``4 / sqrt(n)``, the latter keeping
    white-noise fluctuations (standard error ``1/sqrt(n)``) from qualifying
    across many lags.  Falls back to 64 when the series is constant or no
    peak qualifies.
    """
    x = _first_dim(series)
    x = x - x.mean()
    denom = float(np.dot(x, x))
    if denom <= 0:
        return FALLBACK_WINDOW
    n = x.shape[0]
    max_lag = int(min(max_lag, n - 2))
    if max_lag < 3:
        return FALLBACK_WINDOW
    full = np.correlate(x, x, mode="full")[n - 1 :]
    acf = full[: max_lag + 2] / denom
    lags = np.arange(2, max_lag + 1)
    floor = max(ACF_PEAK_FLOOR, 4.0 / np.sqrt(n))
    peaks = (acf[lags] > acf[lags - 1]) & (acf[lags] >= acf[lags + 1]) & (acf[lags] > floor)
    if not peaks.any():
        return FALLBACK_WINDOW
    cand = lags[peaks]
    return int(cand[np.argmax(acf[cand])])


def fft_window_length(series: TimeSeries, max_len: int = 256) -> int:
    """Period of the dominant non-zero frequency bin, clamped to ``[2, max_len]``."""
    x = _first_dim(series)
    x = x - x.mean()
    n = x.shape[0]
    mag = np.abs(np.fft.rfft(x))[1:]
    if mag.size == 0 or mag.max() <= 1e-12 * max(1.0, np.abs(x).sum()):
        return FALLBACK_WINDOW
    k = int(np.argmax(mag)) + 1
    return int(min(max(round(n / k), 2), max_len))


def resolve_window(cfg: WindowConfig, series: TimeSeries, max_len: int = 256) -> WindowConfig:
    """Turn an ``acf``/``fft`` config into a fixed one for ``series``."""
    if cfg.selector is WindowSelector.FIXED:
        return cfg
    if cfg.selector is WindowSelector.ACF:
        length = acf_window_length(series, max_len)
    else:
        length = fft_window_length(series, max_len)
    return WindowConfig(length=length, stride=cfg.stride)


def dewindow(scores, cfg: WindowConfig, n: int, anchor: str = "window") -> np.ndarray:
    """Map per-window scores back onto the ``n`` points of the source series.

    With ``anchor="window"`` each point gets the mean score of every window
    covering it.  ``anchor="last"`` attributes a window's score only to its
    final point (forecast-style detectors).  Points left uncovered take the
    score of the nearest covering window (earlier window on ties).
    """
    w, s = cfg.length, cfg.stride
    n_w = cfg.n_windows(n)
    a = as_scores(scores, n_w)
    starts = np.arange(n_w) * s
    total = np.zeros(n)
    count = np.zeros(n)
    if anchor == "window":
        if s == 1:
            idx = np.arange(n)
            first = np.maximum(0, idx - w + 1)
            last = np.minimum(idx, n_w - 1)
            csum = np.concatenate(([0.0], np.cumsum(a)))
            total = csum[last + 1] - csum[first]
            count = (last - first + 1).astype(float)
        else:
            for k in range(n_w):
                total[starts[k] : starts[k] + w] += a[k]
                count[starts[k] : starts[k] + w] += 1
        lo, hi = starts, starts + w - 1
    elif anchor == "last":
        ends = starts + w - 1
        total[ends] = a
        count[ends] = 1
        lo = hi = ends
    else:
        raise ValueError(f"unknown anchor {anchor!r}")
    out = np.empty(n)
    covered = count > 0
    out[covered] = total[covered] / count[covered]
    if not covered.all():
        idx = np.flatnonzero(~covered)
        gap = np.maximum(lo[None, :] - idx[:, None], idx[:, None] - hi[None, :])
        out[idx] = a[np.argmin(gap, axis=1)]
    return out
