import numpy as np
import pytest

from tsasd.core import ValidationError
from tsasd.datagen import build_bundle, class_waveform, generate_synthetic_categorical
from tsasd.difficulty import (
    SequenceSets,
    bundle_difficulty,
    bundle_sets,
    knc,
    knc_band,
    na,
    na_from_centroids,
    nc,
    rc,
)
from tsasd.shapedist import sbd


def knn_mean_brute(q, ref, k):
    return np.mean(sorted(sbd(q, r) for r in ref)[:k])


def test_knc_identical_sets():
    rng = np.random.default_rng(0)
    std, other = rng.normal(size=(6, 32)), rng.normal(size=(4, 32))
    assert knc(SequenceSets(std, other, other, k=3)) == pytest.approx(1.0)


def test_knc_full_k_and_brute_force():
    rng = np.random.default_rng(1)
    std, nor, ano = rng.normal(size=(5, 20)), rng.normal(size=(3, 20)), rng.normal(size=(2, 20))
    for k in (1, 2, 5):
        ref = np.mean([knn_mean_brute(a, std, k) for a in ano]) / np.mean([knn_mean_brute(n, std, k) for n in nor])
        assert knc(SequenceSets(std, nor, ano, k)) == pytest.approx(ref, abs=1e-12)


def test_knc_far_anomalies():
    rng = np.random.default_rng(2)
    base, far = class_waveform(0, 64), class_waveform(1, 64)
    std = base + 0.05 * rng.standard_normal((10, 64))
    nor = base + 0.05 * rng.standard_normal((5, 64))
    ano = far + 0.05 * rng.standard_normal((2, 64))
    assert knc(SequenceSets(std, nor, ano, 5)) > 5


def test_knc_errors():
    x = np.ones((3, 8))
    with pytest.raises(ValidationError):
        knc(SequenceSets(x, x, x, 2))  # zero denominator
    with pytest.raises(ValidationError):
        SequenceSets(x, x, x, 4)


def test_rc():
    rng = np.random.default_rng(3)
    a, b = class_waveform(0, 32), class_waveform(3, 32)
    tight = np.vstack([a + 0.01 * rng.standard_normal(32), a + 0.01 * rng.standard_normal(32),
                       b + 0.01 * rng.standard_normal(32), b + 0.01 * rng.standard_normal(32)])
    assert rc(tight) > 1
    with pytest.raises(ValidationError):
        rc(np.vstack([tight, tight]))


def test_rc_equidistant():
    # unit impulses at distinct positions are pairwise shift-aligned: mean equals min
    X = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    D = np.array([[sbd(a, b) for b in X] for a in X])
    assert np.allclose(D[~np.eye(3, dtype=bool)], D[0, 1])
    assert D[0, 1] == 0.0  # impulses align perfectly under shifts, so RC is undefined
    with pytest.raises(ValidationError):
        rc(X)
    eq = np.array([[-2.0, -2.0, -2.0], [-2.0, -2.0, 2.0], [1.0, -1.0, -1.0]])  # all pairs at SBD 1/3
    assert rc(eq) == pytest.approx(1.0)
    Y = np.array([[1.0, 2.0], [2.0, -1.0], [-1.0, -1.0]])
    D = np.array([[sbd(a, b) for b in Y] for a in Y])
    off = ~np.eye(3, dtype=bool)
    ref = (D.sum(axis=1) / 2).mean() / np.where(off, D, np.inf).min(axis=1).mean()
    assert rc(Y) == pytest.approx(ref)


def test_nc_oracle_and_errors():
    rng = np.random.default_rng(4)
    nor, ano = rng.normal(size=(5, 16)), rng.normal(size=(4, 16))
    pair_mean = lambda S: np.mean([sbd(S[i], S[j]) for i in range(len(S)) for j in range(len(S)) if i != j])
    assert nc(nor, ano) == pytest.approx(pair_mean(nor) / pair_mean(ano), abs=1e-12)
    assert nc(nor, nor) == pytest.approx(1.0)
    with pytest.raises(ValidationError):
        nc(nor, np.tile(ano[:1], (3, 1)))


def test_na():
    rng = np.random.default_rng(5)
    cn, ca = rng.normal(size=(3, 16)), rng.normal(size=(2, 16))
    spread = np.mean([sbd(cn[i], cn[j]) for i in range(3) for j in range(3) if i != j])
    cross = min(sbd(a, c) for a in ca for c in cn)
    assert na_from_centroids(cn, ca) == pytest.approx(cross / spread, abs=1e-12)
    assert na_from_centroids(cn, cn[:2]) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValidationError):
        na_from_centroids(np.tile(cn[:1], (2, 1)), ca)
    nor = np.vstack([class_waveform(c, 32) + 0.02 * rng.standard_normal((4, 32)) for c in (0, 1, 2)])
    ano = class_waveform(3, 32) + 0.02 * rng.standard_normal((4, 32))
    assert na(nor, ano, seed=0) > 0


@pytest.mark.parametrize(
    "value,band", [(0.5, "<1"), (1.0, "1-2"), (1.99, "1-2"), (2.0, "2-5"), (7, "5-10"), (10, ">10"), (1e6, ">10")]
)
def test_knc_band(value, band):
    assert knc_band(value) == band


def test_bundle_sets_and_difficulty():
    data = generate_synthetic_categorical(3, 30, 32, 0.05, seed=0)
    b = build_bundle(data, 0, anomaly_count=2, seed=0)
    sets = bundle_sets(b)
    assert sets.ano_set.shape == (2, 32)
    assert sets.std_set.shape[0] == len(b.meta["standard_ids"])
    res = bundle_difficulty(b)
    assert set(res) == {"knc", "rc", "nc", "na"}
    assert res["knc"] > 1
