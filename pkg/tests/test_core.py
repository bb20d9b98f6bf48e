import numpy as np
import pytest
from hypothesis import given, strategies as st

from tsasd.core import (
    AnomalyRange,
    TimeSeries,
    ValidationError,
    WindowConfig,
    WindowSelector,
    check_ranges,
    labels_to_ranges,
    ranges_to_labels,
)


def test_timeseries_shape_and_readonly():
    ts = TimeSeries([1.0, 2.0, 3.0])
    assert ts.values.shape == (3, 1) and ts.n == 3 and ts.d == 1
    with pytest.raises(ValueError):
        ts.values[0, 0] = 5.0


@pytest.mark.parametrize("bad", [[1.0, np.nan], [np.inf], []])
def test_timeseries_rejects_bad_values(bad):
    with pytest.raises(ValidationError):
        TimeSeries(bad)


def test_ranges_to_labels_examples():
    assert ranges_to_labels([], 5).tolist() == [0, 0, 0, 0, 0]
    assert ranges_to_labels([AnomalyRange(1, 2)], 4).tolist() == [0, 1, 1, 0]
    assert ranges_to_labels([AnomalyRange(0, 0), AnomalyRange(3, 3)], 4).tolist() == [1, 0, 0, 1]


def test_labels_to_ranges_examples():
    assert labels_to_ranges([0, 1, 1, 0]) == [AnomalyRange(1, 2)]
    assert labels_to_ranges([1, 1, 1]) == [AnomalyRange(0, 2)]
    assert labels_to_ranges([0, 0]) == []


@given(st.lists(st.integers(0, 1), max_size=60))
def test_label_range_roundtrip(labels):
    ranges = labels_to_ranges(labels)
    check_ranges(ranges, len(labels))
    assert ranges_to_labels(ranges, len(labels)).tolist() == labels


def test_range_validation():
    with pytest.raises(ValidationError):
        AnomalyRange(3, 2)
    with pytest.raises(ValidationError):
        check_ranges([AnomalyRange(0, 2), AnomalyRange(2, 3)], 10)
    with pytest.raises(ValidationError):
        ranges_to_labels([AnomalyRange(0, 5)], 5)


def test_window_config_parse_and_counts():
    assert WindowConfig(2, 1).n_windows(4) == 3
    assert WindowConfig(4, 2).n_windows(10) == 4
    assert WindowConfig.parse("32").length == 32
    assert WindowConfig.parse("acf").selector is WindowSelector.ACF
    assert WindowConfig.parse("fft").tag == "fft"
    assert WindowConfig.parse(" 16 ").tag == "w16"
    with pytest.raises(ValidationError):
        WindowConfig.parse("wide")
    with pytest.raises(ValidationError):
        WindowConfig(0)
    with pytest.raises(ValidationError):
        WindowConfig(5).n_windows(4)
