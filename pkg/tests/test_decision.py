import math

import numpy as np
import pytest

from tsasd.core import ValidationError
from tsasd.decision import DecisionModel, decide, default_threshold, health_series, learn_decision


def erf_series(x, terms=80):
    """Maclaurin series of erf, adequate for |x| <= 2 at double precision."""
    total = 0.0
    for n in range(terms):
        total += (-1) ** n * x ** (2 * n + 1) / (math.factorial(n) * (2 * n + 1))
    return 2.0 / math.sqrt(math.pi) * total


def test_threshold_constant():
    T = default_threshold()
    assert abs(T - 0.9772498681) < 1e-9
    assert abs(T - (1 - (1 - erf_series(math.sqrt(2))) / 2)) < 1e-12
    assert abs(T - 0.5 * (1 + erf_series(2 / math.sqrt(2)))) < 1e-12
    assert 0.9 < T < 1


def test_learn_decision_examples():
    m = learn_decision([0, 0, 0, 0])
    assert m.mu == 0 and m.sigma == 1e-12
    m = learn_decision([1, 3])
    assert (m.mu, m.sigma) == (2.0, 1.0)
    m = learn_decision([2, 2, 2, 6])
    assert m.mu == 3.0 and abs(m.sigma - math.sqrt(3)) < 1e-12
    with pytest.raises(ValidationError):
        learn_decision([])


def test_decide_values():
    m = DecisionModel(0.0, 1.0)
    assert decide(m, 1.0) == 0.0
    assert abs(decide(m, 3.0) - (erf_series(math.sqrt(2)) - 0.5) * 2) < 1e-12
    assert abs(decide(m, 3.0) - 0.909000) < 1e-6
    assert decide(m, 1e6) == 1.0
    assert isinstance(decide(m, 0.5), float)


def test_decide_monotone_random():
    rng = np.random.default_rng(0)
    for _ in range(200):
        m = DecisionModel(rng.normal(), rng.uniform(0.01, 5))
        a = np.sort(rng.normal(m.mu, 4 * m.sigma, size=50))
        h = decide(m, a)
        assert np.all(np.diff(h) >= 0) and h.min() >= 0 and h.max() <= 1


def test_health_series_labels():
    m = DecisionModel(0.0, 1.0)
    h, lab = health_series(m, [-1.0, 0.5, 1.0])
    assert h.tolist() == [0, 0, 0] and lab.tolist() == [0, 0, 0]
    h, lab = health_series(m, [10.0])
    assert lab.tolist() == [1]
    a = np.linspace(0, 6, 61)
    h, lab = health_series(m, a)
    assert lab.tolist() == (h >= m.threshold).astype(int).tolist()


def test_decision_model_validation():
    with pytest.raises(ValidationError):
        DecisionModel(0.0, 0.0)
