"""Point-wise, range-based and threshold-free accuracy measures."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy.stats import rankdata

from .core import ValidationError, as_labels, as_scores, labels_to_ranges

METRIC_NAMES = ("precision", "recall", "f1", "range_f1", "auc_roc", "auc_pr", "vus_roc", "vus_pr")
METRIC_TITLES = ("Precision", "Recall", "F1", "Range-F1", "AUC-ROC", "AUC-PR", "VUS-ROC", "VUS-PR")
DEFAULT_VUS_BUFFER = 16


@dataclass(frozen=True)
class MetricRecord:
    precision: float
    recall: float
    f1: float
    range_f1: float
    auc_roc: Optional[float]
    auc_pr: Optional[float]
    vus_roc: Optional[float]
    vus_pr: Optional[float]

    def as_dict(self) -> dict:
        return asdict(self)


def _pair(pred, truth):
    p = as_labels(pred)
    t = as_labels(truth)
    if p.shape != t.shape:
        raise ValidationError(f"length mismatch: {p.shape[0]} predictions vs {t.shape[0]} labels")
    return p, t


def _f1(p: float, r: float) -> float:
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)


def point_prf(pred, truth) -> tuple[float, float, float]:
    p, t = _pair(pred, truth)
    tp = float(np.sum((p == 1) & (t == 1)))
    fp = float(np.sum((p == 1) & (t == 0)))
    fn = float(np.sum((p == 0) & (t == 1)))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    return precision, recall, _f1(precision, recall)


# -- range-based precision / recall -----------------------------------------


def _bias(i: int, length: int, kind: str) -> float:
    if kind == "flat":
        return 1.0
    if kind == "front":
        return float(length - i)
    if kind == "back":
        return float(i + 1)
    if kind == "middle":
        return float(i + 1) if i + 1 <= length / 2 else float(length - i)
    raise ValueError(f"unknown positional bias {kind!r}")


def _overlap_reward(rng, others, bias: str, cardinality: str) -> tuple[float, bool]:
    """(cardinality * positional overlap, existence) of one range against a set."""
    length = rng.end - rng.start + 1
    weights = np.array([_bias(i, length, bias) for i in range(length)])
    hit = np.zeros(length, dtype=bool)
    n_overlapping = 0
    for o in others:
        lo, hi = max(rng.start, o.start), min(rng.end, o.end)
        if lo <= hi:
            n_overlapping += 1
            hit[lo - rng.start : hi - rng.start + 1] = True
    if n_overlapping == 0:
        return 0.0, False
    if cardinality == "reciprocal":
        gamma = 1.0 / n_overlapping
    elif cardinality == "one":
        gamma = 1.0
    else:
        raise ValueError(f"unknown cardinality factor {cardinality!r}")
    return gamma * float(weights[hit].sum() / weights.sum()), True


def _range_score(subject, reference, alpha: float, bias: str, cardinality: str) -> float:
    if not subject:
        return 0.0
    total = 0.0
    for r in subject:
        overlap, exists = _overlap_reward(r, reference, bias, cardinality)
        total += alpha * float(exists) + (1 - alpha) * overlap
    return total / len(subject)


def range_precision_recall(
    pred,
    truth,
    alpha: float = 0.5,
    bias: str = "flat",
    precision_alpha: float = 0.0,
    precision_bias: str | None = None,
    cardinality: str = "reciprocal",
) -> tuple[float, float]:
    p, t = _pair(pred, truth)
    pr, tr = labels_to_ranges(p), labels_to_ranges(t)
    recall = _range_score(tr, pr, alpha, bias, cardinality)
    precision = _range_score(pr, tr, precision_alpha, precision_bias or bias, cardinality)
    return precision, recall


def range_f1(pred, truth, alpha: float = 0.5, bias: str = "flat", **kwargs) -> float:
    """Harmonic mean of range-based precision and recall.

    Recall rewards existence (weight ``alpha``) and positional overlap of each
    true range; precision uses overlap only by default.
    """
    precision, recall = range_precision_recall(pred, truth, alpha, bias, **kwargs)
    return _f1(precision, recall)


# -- threshold-free ------------------------------------------------------------


def _scored(scores, truth):
    s = as_scores(scores)
    t = np.asarray(truth, dtype=float).ravel()
    if s.shape != t.shape:
        raise ValidationError(f"length mismatch: {s.shape[0]} scores vs {t.shape[0]} labels")
    return s, t


def auc_roc(scores, truth) -> Optional[float]:
    """Mann-Whitney AUC (ties count half); ``None`` when only one class is present."""
    s, t = _scored(scores, as_labels(truth))
    n_pos = int(t.sum())
    n_neg = t.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = rankdata(s)
    u = ranks[t == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def _threshold_curve(s: np.ndarray, soft: np.ndarray):
    """Cumulative soft TP/FP at each distinct score threshold, descending."""
    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    y = soft[order]
    tp = np.cumsum(y)
    fp = np.cumsum(1.0 - y)
    last = np.r_[np.flatnonzero(np.diff(s_sorted) != 0), s_sorted.size - 1]
    return tp[last], fp[last]


_trapezoid = getattr(np, "trapezoid", None) or np.trapz  # numpy < 2 lacks trapezoid


def _roc_area(tpr, fpr) -> float:
    return float(_trapezoid(np.r_[0.0, tpr], np.r_[0.0, fpr]))


def _ap(recall, precision) -> float:
    return float(np.sum(np.diff(np.r_[0.0, recall]) * precision))


def auc_pr(scores, truth) -> Optional[float]:
    """Average precision over distinct score thresholds; ``None`` without positives."""
    s, t = _scored(scores, as_labels(truth))
    pos = t.sum()
    if pos == 0:
        return None
    tp, fp = _threshold_curve(s, t)
    return _ap(tp / pos, tp / (tp + fp))


def ramp_labels(truth, buffer: int) -> np.ndarray:
    """Soft labels: 1 inside true ranges, linear ramps of width ``buffer`` outside.

    Ramps decay as ``1 - j / (buffer + 1)`` at distance ``j``; overlapping
    contributions are summed and capped at 1.
    """
    t = as_labels(truth)
    n = t.size
    soft = t.astype(float)
    if buffer <= 0:
        return soft
    ramp = 1.0 - np.arange(1, buffer + 1) / (buffer + 1.0)
    for r in labels_to_ranges(t):
        left = np.arange(r.start - 1, r.start - buffer - 1, -1)
        right = np.arange(r.end + 1, r.end + buffer + 1)
        for idx in (left, right):
            ok = (idx >= 0) & (idx < n)
            soft[idx[ok]] += ramp[ok]
    return np.minimum(soft, 1.0)


def _existence_ratio(s_desc_thresholds, s, ranges):
    """Fraction of ranges containing at least one point scored >= each threshold."""
    if not ranges:
        return np.ones_like(s_desc_thresholds)
    peaks = np.array([s[r.start : r.end + 1].max() for r in ranges])
    return (peaks[None, :] >= s_desc_thresholds[:, None]).mean(axis=1)


def vus(scores, truth, max_buffer: int = DEFAULT_VUS_BUFFER, kind: str = "roc", existence: bool = False):
    """Volume under the ROC or PR surface across buffer widths ``0..max_buffer``.

    For each width the labels are relaxed with :func:`ramp_labels` and a soft
    ROC (trapezoidal) or PR (average precision) area is computed, with soft
    true positives divided by the number of original positives and capped at
    one; the volume is the mean over widths.  With ``existence=True`` the TPR is additionally
    weighted by the fraction of buffered ranges reached at each threshold.
    """
    s, t = _scored(scores, as_labels(truth))
    if kind not in ("roc", "pr"):
        raise ValueError(f"unknown kind {kind!r}")
    t = as_labels(t)
    if t.sum() == 0 or (kind == "roc" and t.sum() == t.size):
        return None
    n_pos = float(t.sum())
    thresholds = np.unique(s)[::-1]
    areas = []
    for buf in range(max_buffer + 1):
        soft = ramp_labels(t, buf)
        neg = soft.size - soft.sum()
        tp, fp = _threshold_curve(s, soft)
        # buffer mass can only add credit: recall is normalised by the original positives
        tpr = np.minimum(tp / n_pos, 1.0)
        if existence:
            ranges = labels_to_ranges((soft > 0).astype(int))
            tpr = tpr * _existence_ratio(thresholds, s, ranges)
        if kind == "roc":
            areas.append(_roc_area(tpr, fp / neg) if neg > 0 else 1.0)
        else:
            areas.append(_ap(tpr, tp / (tp + fp)))
    return float(np.mean(areas))


def evaluate(scores, pred, truth, max_buffer: int = DEFAULT_VUS_BUFFER, alpha: float = 0.5, bias: str = "flat") -> MetricRecord:
    precision, recall, f1 = point_prf(pred, truth)
    return MetricRecord(
        precision=precision,
        recall=recall,
        f1=f1,
        range_f1=range_f1(pred, truth, alpha=alpha, bias=bias),
        auc_roc=auc_roc(scores, truth),
        auc_pr=auc_pr(scores, truth),
        vus_roc=vus(scores, truth, max_buffer, "roc"),
        vus_pr=vus(scores, truth, max_buffer, "pr"),
    )
