import numpy as np
import pytest

from tsasd.core import TimeSeries
from tsasd.datagen import build_bundle, generate_synthetic_categorical
from tsasd.io import (
    DataError,
    bundle_digest,
    read_bundle,
    read_labels_csv,
    read_series_csv,
    write_bundle,
    write_series_csv,
)


def test_series_roundtrip(tmp_path):
    ts = TimeSeries(np.random.default_rng(0).normal(size=(20, 2)))
    write_series_csv(tmp_path / "s.csv", ts)
    back = read_series_csv(tmp_path / "s.csv")
    assert back.values.tobytes() == ts.values.tobytes()
    assert (tmp_path / "s.csv").read_text().splitlines()[0] == "dim0,dim1"


@pytest.mark.parametrize(
    "text,line",
    [("dim0\n1\nabc\n", 3), ("dim0,dim1\n1,2\n3\n", 3), ("dim0\n1\nnan\n", 3), ("dim0\n", None)],
)
def test_malformed_csv_names_line(tmp_path, text, line):
    p = tmp_path / "bad.csv"
    p.write_text(text)
    with pytest.raises(DataError) as exc:
        read_series_csv(p)
    if line is not None:
        assert f"bad.csv:{line}" in str(exc.value)


def test_labels_must_be_binary(tmp_path):
    p = tmp_path / "l.csv"
    p.write_text("label\n0\n2\n")
    with pytest.raises(DataError, match=":3:"):
        read_labels_csv(p)


def test_bundle_roundtrip(tmp_path):
    data = generate_synthetic_categorical(3, 20, 32, 0.05, seed=0)
    b = build_bundle(data, 0, anomaly_count=1, seed=0)
    write_bundle(b, tmp_path / "b")
    assert sorted(p.name for p in (tmp_path / "b").iterdir()) == ["labels.csv", "meta.json", "standard.csv", "test.csv"]
    back = read_bundle(tmp_path / "b")
    assert back.truth == b.truth
    assert back.test.values.tobytes() == b.test.values.tobytes()
    assert back.meta == b.meta
    d1 = bundle_digest(tmp_path / "b")
    write_bundle(b, tmp_path / "c")
    assert bundle_digest(tmp_path / "c") == d1
    (tmp_path / "c" / "labels.csv").unlink()
    with pytest.raises(DataError):
        read_bundle(tmp_path / "c")
