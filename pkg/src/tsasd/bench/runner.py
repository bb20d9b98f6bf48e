"""Run the (bundle x detector x window) experiment matrix."""
from __future__ import annotations

import hashlib
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from joblib import Parallel, delayed

from .. import __version__
from ..core import WindowConfig
from ..datagen import DatasetBundle
from ..detectors import DetectorSpec
from ..io import atomic_write, dumps_json, fmt
from ..metrics import DEFAULT_VUS_BUFFER, METRIC_NAMES, MetricRecord, evaluate
from ..pipeline import PipelineConfig, test, train

RECORD_COLUMNS = (
    "bundle", "detector", "window", "window_length", "seed", *METRIC_NAMES,
    "knc", "wall_time_fit", "wall_time_score", "error",
)


@dataclass
class RunRecord:
    bundle: str
    detector: str
    window: str
    seed: int
    metrics: Optional[MetricRecord] = None
    window_length: Optional[int] = None
    knc: Optional[float] = None
    wall_time_fit: float = 0.0
    wall_time_score: float = 0.0
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.metrics is not None

    def value(self, metric: str) -> Optional[float]:
        return None if self.metrics is None else getattr(self.metrics, metric)

    def as_row(self) -> dict:
        row = {
            "bundle": self.bundle,
            "detector": self.detector,
            "window": self.window,
            "window_length": self.window_length,
            "seed": self.seed,
            "knc": self.knc,
            "wall_time_fit": self.wall_time_fit,
            "wall_time_score": self.wall_time_score,
            "error": self.error,
        }
        for name in METRIC_NAMES:
            row[name] = self.value(name)
        return {k: row[k] for k in RECORD_COLUMNS}

    @classmethod
    def from_row(cls, row: dict) -> "RunRecord":
        metrics = None
        if not row.get("error"):
            metrics = MetricRecord(**{k: row[k] for k in METRIC_NAMES})
        return cls(
            bundle=row["bundle"],
            detector=row["detector"],
            window=row["window"],
            seed=int(row["seed"]),
            metrics=metrics,
            window_length=row.get("window_length"),
            knc=row.get("knc"),
            wall_time_fit=float(row.get("wall_time_fit") or 0.0),
            wall_time_score=float(row.get("wall_time_score") or 0.0),
            error=row.get("error") or None,
        )


@dataclass(frozen=True)
class MetricParams:
    vus_buffer: Optional[int] = None
    range_alpha: float = 0.5
    range_bias: str = "flat"

    def buffer_for(self, bundle: DatasetBundle) -> int:
        if self.vus_buffer is not None:
            return int(self.vus_buffer)
        m = bundle.meta.get("instance_length")
        return int(m) // 4 if m else DEFAULT_VUS_BUFFER


def cell_seed(seed: int, bundle: str, detector: str, window: str) -> int:
    digest = hashlib.sha256(f"{seed}|{bundle}|{detector}|{window}".encode()).digest()
    return int.from_bytes(digest[:4], "little")


def run_cell(
    bundle_id: str,
    bundle: DatasetBundle,
    spec: DetectorSpec,
    window: WindowConfig,
    seed: int,
    split_fraction: float = 0.7,
    metric_params: MetricParams = MetricParams(),
    clock: Callable[[], float] = time.perf_counter,
) -> RunRecord:
    """Train, test and score one cell; failures become records with ``error`` set."""
    s = cell_seed(seed, bundle_id, spec.id, window.tag)
    rec = RunRecord(bundle_id, spec.id, window.tag, s, knc=bundle.meta.get("knc"))
    cfg = PipelineConfig(window, DetectorSpec(spec.id, spec.params, s), split_fraction, s)
    try:
        t0 = clock()
        tp = train(bundle.standard, cfg)
        t1 = clock()
        scores, _, labels = test(tp, bundle.test)
        t2 = clock()
        rec.window_length = tp.window.length
        rec.wall_time_fit = max(t1 - t0, 0.0)
        rec.wall_time_score = max(t2 - t1, 0.0)
        rec.metrics = evaluate(
            scores,
            labels,
            bundle.labels,
            max_buffer=metric_params.buffer_for(bundle),
            alpha=metric_params.range_alpha,
            bias=metric_params.range_bias,
        )
    except Exception as exc:  # isolate cell failures
        rec.error = f"{type(exc).__name__}: {exc}"
    return rec


class CellCache:
    """Per-cell JSON cache keyed by a content hash of everything that feeds the cell."""

    def __init__(self, root):
        self.root = Path(root)

    def key(self, bundle_digest: str, spec: DetectorSpec, window: WindowConfig, seed: int, extra: dict) -> str:
        payload = json.dumps(
            {
                "version": __version__,
                "bundle": bundle_digest,
                "detector": [spec.id, spec.params],
                "window": [window.length, window.stride, window.selector.value],
                "seed": seed,
                "extra": extra,
            },
            sort_keys=True,
            default=str,
        )
        return hashlib.sha256(payload.encode()).hexdigest()

    def get(self, key: str) -> Optional[RunRecord]:
        path = self.root / f"{key}.json"
        if not path.exists():
            return None
        return RunRecord.from_row(json.loads(path.read_text()))

    def put(self, key: str, rec: RunRecord) -> None:
        atomic_write(self.root / f"{key}.json", dumps_json(_jsonable(rec.as_row())))


def _jsonable(row: dict) -> dict:
    out = {}
    for k, v in row.items():
        if isinstance(v, (np.floating,)):
            v = float(v)
        elif isinstance(v, np.integer):
            v = int(v)
        out[k] = v
    return out


def run_matrix(
    bundles: dict[str, DatasetBundle],
    detectors: Sequence,
    windows: Sequence,
    seed: int = 0,
    split_fraction: float = 0.7,
    metric_params: MetricParams = MetricParams(),
    jobs: int = 1,
    clock: Callable[[], float] = time.perf_counter,
    cache: Optional[CellCache] = None,
    digests: Optional[dict[str, str]] = None,
) -> list[RunRecord]:
    """One record per (bundle, detector, window) in that nested order.

    Cells are seeded from ``(seed, bundle, detector, window)`` so results do
    not depend on scheduling.  With ``cache`` set, cells whose inputs hash to
    a stored record are not recomputed.
    """
    specs = [d if isinstance(d, DetectorSpec) else DetectorSpec(str(d)) for d in detectors]
    wins = [WindowConfig.parse(w) for w in windows]
    if not bundles or not specs or not wins:
        raise ValueError("run_matrix needs at least one bundle, detector and window")
    cells = [(b, s, w) for b in bundles for s in specs for w in wins]
    extra = {"split": split_fraction, **asdict(metric_params)}
    results: list[Optional[RunRecord]] = [None] * len(cells)
    keys = [None] * len(cells)
    todo = []
    for i, (b, s, w) in enumerate(cells):
        if cache is not None and digests is not None:
            keys[i] = cache.key(digests[b], s, w, seed, extra)
            hit = cache.get(keys[i])
            if hit is not None:
                results[i] = hit
                continue
        todo.append(i)

    def _one(i):
        b, s, w = cells[i]
        return run_cell(b, bundles[b], s, w, seed, split_fraction, metric_params, clock)

    if jobs == 1:
        fresh = [_one(i) for i in todo]
    else:
        fresh = Parallel(n_jobs=jobs)(delayed(_one)(i) for i in todo)
    for i, rec in zip(todo, fresh):
        results[i] = rec
        if cache is not None and keys[i] is not None:
            cache.put(keys[i], rec)
    return results  # type: ignore[return-value]


def records_to_csv(records: Sequence[RunRecord], path) -> None:
    lines = [",".join(RECORD_COLUMNS)]
    for rec in records:
        row = rec.as_row()
        cells = []
        for col in RECORD_COLUMNS:
            v = row[col]
            cells.append(_csv_text(v) if isinstance(v, str) else fmt(v))
        lines.append(",".join(cells))
    atomic_write(path, "\n".join(lines) + "\n")


def _csv_text(v: str) -> str:
    if any(c in v for c in ',"\n'):
        return '"' + v.replace('"', '""').replace("\n", " ") + '"'
    return v


def records_to_json(records: Sequence[RunRecord], path) -> None:
    atomic_write(path, dumps_json([_jsonable(r.as_row()) for r in records]))


def records_from_json(path) -> list[RunRecord]:
    return [RunRecord.from_row(row) for row in json.loads(Path(path).read_text())]
