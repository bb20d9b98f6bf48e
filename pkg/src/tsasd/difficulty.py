"""Dataset difficulty measures under shape-based distance: KNC, RC, NC and NA."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ValidationError
from .shapedist import sbd_kmeans, sbd_matrix

KNC_BANDS = ("<1", "1-2", "2-5", "5-10", ">10")
_BAND_EDGES = (1.0, 2.0, 5.0, 10.0)


@dataclass(frozen=True)
class SequenceSets:
    std_set: np.ndarray
    nor_set: np.ndarray
    ano_set: np.ndarray
    k: int = 5

    def __post_init__(self):
        for name in ("std_set", "nor_set", "ano_set"):
            object.__setattr__(self, name, np.atleast_2d(np.asarray(getattr(self, name), dtype=float)))
        if self.std_set.shape[0] == 0 or self.std_set.size == 0:
            raise ValidationError("standard set is empty")
        if not 1 <= self.k <= self.std_set.shape[0]:
            raise ValidationError(f"k={self.k} must be in [1, {self.std_set.shape[0]}]")


def _knn_mean(query: np.ndarray, ref: np.ndarray, k: int) -> np.ndarray:
    D = sbd_matrix(query, ref)
    return np.sort(D, axis=1)[:, :k].mean(axis=1)


def knc(sets: SequenceSets) -> float:
    """Mean k-NN SBD of anomalous segments to the standard set over that of normal segments."""
    if sets.nor_set.size == 0 or sets.ano_set.size == 0:
        raise ValidationError("KNC needs non-empty normal and anomalous sets")
    num = _knn_mean(sets.ano_set, sets.std_set, sets.k).mean()
    den = _knn_mean(sets.nor_set, sets.std_set, sets.k).mean()
    if den <= 0:
        raise ValidationError("KNC undefined: normal segments coincide with the standard set")
    return float(num / den)


def rc(all_seqs) -> float:
    """Relative contrast: mean SBD to the others over the 1-NN SBD, averaged over the set."""
    X = np.atleast_2d(np.asarray(all_seqs, dtype=float))
    if X.shape[0] < 3:
        raise ValidationError("RC needs at least three sequences")
    D = sbd_matrix(X)
    off = ~np.eye(X.shape[0], dtype=bool)
    d_mean = np.where(off, D, 0.0).sum(axis=1) / (X.shape[0] - 1)
    d_min = np.where(off, D, np.inf).min(axis=1)
    if d_min.mean() <= 0:
        raise ValidationError("RC undefined: every sequence has an identical neighbour")
    return float(d_mean.mean() / d_min.mean())


def _mean_pairwise(X: np.ndarray) -> float:
    D = sbd_matrix(X)
    off = ~np.eye(X.shape[0], dtype=bool)
    return float(D[off].mean())


def nc(nor_set, ano_set) -> float:
    """Mean pairwise SBD among normal segments over that among anomalous segments."""
    nor = np.atleast_2d(np.asarray(nor_set, dtype=float))
    ano = np.atleast_2d(np.asarray(ano_set, dtype=float))
    if nor.shape[0] < 2 or ano.shape[0] < 2:
        raise ValidationError("NC needs at least two sequences per set")
    den = _mean_pairwise(ano)
    if den <= 0:
        raise ValidationError("NC undefined: anomalous segments are identical")
    return _mean_pairwise(nor) / den


def na_from_centroids(nor_centroids, ano_centroids) -> float:
    cn = np.atleast_2d(np.asarray(nor_centroids, dtype=float))
    ca = np.atleast_2d(np.asarray(ano_centroids, dtype=float))
    if cn.shape[0] < 2:
        raise ValidationError("NA needs at least two normal centroids")
    den = _mean_pairwise(cn)
    if den <= 0:
        raise ValidationError("NA undefined: normal centroids coincide")
    return float(sbd_matrix(ca, cn).min() / den)


def na(nor_set, ano_set, K_nor: int = 3, K_ano: int = 3, seed: int = 0) -> float:
    """Nearest anomalous-to-normal centroid SBD over the mean normal centroid spread."""
    nor = np.atleast_2d(np.asarray(nor_set, dtype=float))
    ano = np.atleast_2d(np.asarray(ano_set, dtype=float))
    if K_nor < 2 or nor.shape[0] < 2:
        raise ValidationError("NA needs K_nor >= 2 and at least two normal sequences")
    cn = sbd_kmeans(nor, min(K_nor, nor.shape[0]), seed=seed).centroids
    ca = sbd_kmeans(ano, min(max(K_ano, 1), ano.shape[0]), seed=seed).centroids
    return na_from_centroids(cn, ca)


def knc_band(value: float) -> str:
    """Half-open difficulty band: [0,1), [1,2), [2,5), [5,10), [10, inf)."""
    if value < 0:
        raise ValidationError("KNC is non-negative")
    return KNC_BANDS[int(np.searchsorted(_BAND_EDGES, value, side="right"))]


def bundle_sets(bundle, k: int = 5) -> SequenceSets:
    """Standard, normal-test and injected segments of an instance-aligned bundle."""
    m = int(bundle.meta["instance_length"])
    std = bundle.standard.values[:, 0].reshape(-1, m)
    test = bundle.test.values[:, 0].reshape(-1, m)
    ano_pos = np.asarray(bundle.meta["anomaly_positions"], dtype=int)
    is_ano = np.zeros(test.shape[0], dtype=bool)
    is_ano[ano_pos] = True
    return SequenceSets(std, test[~is_ano], test[is_ano], k=min(k, std.shape[0]))


def bundle_difficulty(bundle, k: int = 5, K_nor: int = 3, K_ano: int = 3, seed: int = 0) -> dict:
    """KNC plus the legacy measures; entries that are undefined for the bundle are ``None``."""
    sets = bundle_sets(bundle, k)
    out = {}
    for name, fn in (
        ("knc", lambda: knc(sets)),
        ("rc", lambda: rc(np.vstack([sets.std_set, sets.nor_set, sets.ano_set]))),
        ("nc", lambda: nc(sets.nor_set, sets.ano_set)),
        ("na", lambda: na(sets.nor_set, sets.ano_set, K_nor, K_ano, seed)),
    ):
        try:
            out[name] = fn()
        except ValidationError:
            out[name] = None
    return out
