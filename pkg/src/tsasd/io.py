"""On-disk formats: series CSVs, bundle directories and atomic writes.

Bundle directory::

    standard.csv   header ``dim0,...``, one point per line
    test.csv       same layout as standard.csv
    labels.csv     header ``label``, one 0/1 per test point
    meta.json      bundle metadata, sorted keys
"""
from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .core import TimeSeries, ValidationError, labels_to_ranges
from .datagen import DatasetBundle

BUNDLE_FILES = ("standard.csv", "test.csv", "labels.csv", "meta.json")


class DataError(ValidationError):
    """Malformed input file."""


def atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def dumps_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_columns(path, header: list[str], columns) -> None:
    cols = [np.asarray(c) for c in columns]
    lines = [",".join(header)]
    for row in zip(*cols):
        lines.append(",".join(fmt(v) for v in row))
    atomic_write(path, "\n".join(lines) + "\n")


def write_series_csv(path, series: TimeSeries) -> None:
    write_columns(path, [f"dim{j}" for j in range(series.d)], series.values.T)


def read_matrix_csv(path) -> tuple[list[str], np.ndarray]:
    """Header plus float rows; raises :class:`DataError` naming the offending line."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror}") from None
    lines = text.splitlines()
    if not lines:
        raise DataError(f"{path}:1: empty file")
    header = [h.strip() for h in lines[0].split(",")]
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != len(header):
            raise DataError(f"{path}:{lineno}: expected {len(header)} fields, got {len(parts)}")
        try:
            vals = [float(p) for p in parts]
        except ValueError:
            raise DataError(f"{path}:{lineno}: non-numeric value in {line.strip()!r}") from None
        if not all(np.isfinite(vals)):
            raise DataError(f"{path}:{lineno}: non-finite value")
        rows.append(vals)
    if not rows:
        raise DataError(f"{path}: no data rows")
    return header, np.array(rows, dtype=float)


def read_series_csv(path, name: str | None = None) -> TimeSeries:
    _, values = read_matrix_csv(path)
    return TimeSeries(values, name or Path(path).stem)


def read_vector_csv(path) -> np.ndarray:
    header, values = read_matrix_csv(path)
    if values.shape[1] != 1:
        raise DataError(f"{path}: expected a single column, got {values.shape[1]}")
    return values[:, 0]


def read_labels_csv(path) -> np.ndarray:
    vals = read_vector_csv(path)
    bad = np.flatnonzero((vals != 0) & (vals != 1))
    if bad.size:
        raise DataError(f"{path}:{bad[0] + 2}: label must be 0 or 1")
    return vals.astype(np.int8)


def write_bundle(bundle: DatasetBundle, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_series_csv(out / "standard.csv", bundle.standard)
    write_series_csv(out / "test.csv", bundle.test)
    write_columns(out / "labels.csv", ["label"], [bundle.labels])
    atomic_write(out / "meta.json", dumps_json(bundle.meta))
    return out


def read_bundle(path) -> DatasetBundle:
    path = Path(path)
    missing = [f for f in BUNDLE_FILES if not (path / f).exists()]
    if missing:
        raise DataError(f"{path}: missing bundle files {missing}")
    standard = read_series_csv(path / "standard.csv", "standard")
    test = read_series_csv(path / "test.csv", "test")
    labels = read_labels_csv(path / "labels.csv")
    if labels.shape[0] != test.n:
        raise DataError(f"{path}: labels.csv has {labels.shape[0]} rows, test.csv has {test.n}")
    try:
        meta = json.loads((path / "meta.json").read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{path / 'meta.json'}:{exc.lineno}: {exc.msg}") from None
    meta.setdefault("name", path.name)
    return DatasetBundle(standard, test, labels_to_ranges(labels), meta)


def bundle_digest(path) -> str:
    """Content hash of a bundle directory's four files."""
    h = hashlib.sha256()
    for name in BUNDLE_FILES:
        h.update(name.encode())
        h.update((Path(path) / name).read_bytes())
    return h.hexdigest()
