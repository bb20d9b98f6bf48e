"""Aggregation, ranking and significance testing over run records."""
from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass
from typing import Optional, Sequence

import networkx as nx
import numpy as np
from scipy.stats import chi2, norm, rankdata

from ..detectors import REGISTRY
from ..difficulty import KNC_BANDS, knc_band


def bundle_values(records, metric: str) -> dict[str, dict[str, float]]:
    """detector -> bundle -> metric averaged over that bundle's window configs."""
    acc: dict = defaultdict(lambda: defaultdict(list))
    for r in records:
        v = r.value(metric)
        if v is not None:
            acc[r.detector][r.bundle].append(v)
    return {d: {b: float(np.mean(vs)) for b, vs in per.items()} for d, per in acc.items()}


def _detectors(records) -> list[str]:
    return sorted({r.detector for r in records})


def _bundles(records) -> list[str]:
    return sorted({r.bundle for r in records})


def aggregate(records, metric: str) -> dict[str, dict]:
    """Per-detector mean over bundles, with the number of bundles used and absent."""
    vals = bundle_values(records, metric)
    bundles = _bundles(records)
    out = {}
    for det in _detectors(records):
        per = vals.get(det, {})
        out[det] = {
            "mean": float(np.mean(list(per.values()))) if per else None,
            "n": len(per),
            "absent": len(bundles) - len(per),
        }
    return out


@dataclass
class RankTable:
    metric: str
    detectors: list[str]
    bundles: list[str]
    ranks: np.ndarray  # detectors x bundles
    values: np.ndarray
    dropped_bundles: list[str]

    @property
    def mean_ranks(self) -> dict[str, float]:
        return {d: float(r) for d, r in zip(self.detectors, self.ranks.mean(axis=1))}


def rank_matrix(values: np.ndarray) -> np.ndarray:
    """Rank each column (bundle) with 1 = highest value; ties share the average rank."""
    return np.column_stack([rankdata(-values[:, j], method="average") for j in range(values.shape[1])])


def rank_table(records, metric: str) -> RankTable:
    """Ranks on the bundles where every detector has a value."""
    dets = _detectors(records)
    if len(dets) < 2:
        raise ValueError("ranking needs at least two detectors")
    vals = bundle_values(records, metric)
    complete, dropped = [], []
    for b in _bundles(records):
        (complete if all(b in vals.get(d, {}) for d in dets) else dropped).append(b)
    V = np.array([[vals[d][b] for b in complete] for d in dets]).reshape(len(dets), len(complete))
    R = rank_matrix(V) if complete else V
    return RankTable(metric, dets, complete, R, V, dropped)


def friedman(table: RankTable) -> tuple[float, float]:
    k, n = table.ranks.shape
    if n < 1 or k < 2:
        return 0.0, 1.0
    mean = table.ranks.mean(axis=1)
    stat = 12.0 * n / (k * (k + 1)) * float(np.sum((mean - (k + 1) / 2.0) ** 2))
    return stat, float(chi2.sf(stat, k - 1))


def _signed_ranks(diffs):
    d = np.asarray(diffs, dtype=float)
    d = d[d != 0]
    ranks = rankdata(np.abs(d))
    return d, ranks


def signed_rank_exact(diffs) -> float:
    """Two-sided exact p-value from the signed-rank null distribution (ties allowed)."""
    d, ranks = _signed_ranks(diffs)
    if d.size == 0:
        return 1.0
    # average ranks are multiples of 1/2
    r2 = np.rint(ranks * 2).astype(int)
    dist = np.zeros(r2.sum() + 1)
    dist[0] = 1.0
    for r in r2:
        shifted = np.zeros_like(dist)
        shifted[r:] = dist[: dist.size - r]
        dist = dist + shifted
    dist /= dist.sum()
    t = int(r2[d > 0].sum())
    lower = dist[: t + 1].sum()
    upper = dist[t:].sum()
    return float(min(1.0, 2.0 * min(lower, upper)))


def signed_rank_normal(diffs) -> float:
    """Two-sided normal approximation with tie and continuity corrections."""
    d, ranks = _signed_ranks(diffs)
    n = d.size
    if n == 0:
        return 1.0
    t_plus = ranks[d > 0].sum()
    mean = n * (n + 1) / 4.0
    _, counts = np.unique(ranks, return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24.0 - np.sum(counts**3 - counts) / 48.0
    if var <= 0:
        return 1.0
    z = max(abs(t_plus - mean) - 0.5, 0.0) / np.sqrt(var)
    return float(min(1.0, 2.0 * norm.sf(z)))


def signed_rank_test(diffs, method: str = "auto", exact_below: int = 6) -> float:
    n = int(np.count_nonzero(np.asarray(diffs, dtype=float)))
    if method == "auto":
        method = "exact" if n < exact_below else "normal"
    if method == "exact":
        return signed_rank_exact(diffs)
    if method == "normal":
        return signed_rank_normal(diffs)
    raise ValueError(f"unknown method {method!r}")


def holm(pvalues: Sequence[float]) -> np.ndarray:
    p = np.asarray(pvalues, dtype=float)
    m = p.size
    order = np.argsort(p, kind="stable")
    adj = np.empty(m)
    running = 0.0
    for i, idx in enumerate(order):
        running = max(running, min(1.0, (m - i) * p[idx]))
        adj[idx] = running
    return adj


@dataclass
class PairwiseTests:
    detectors: list[str]
    p_raw: np.ndarray
    p_adjusted: np.ndarray


def wilcoxon_pairs(records, metric: str, method: str = "auto", exact_below: int = 6, correction: str = "holm") -> PairwiseTests:
    """Signed-rank tests for every detector pair over shared bundles."""
    vals = bundle_values(records, metric)
    dets = _detectors(records)
    k = len(dets)
    P = np.ones((k, k))
    pairs = list(itertools.combinations(range(k), 2))
    raw = []
    for i, j in pairs:
        shared = sorted(set(vals.get(dets[i], {})) & set(vals.get(dets[j], {})))
        diffs = [vals[dets[i]][b] - vals[dets[j]][b] for b in shared]
        raw.append(signed_rank_test(diffs, method, exact_below) if diffs else 1.0)
    if correction == "holm":
        adj = holm(raw) if raw else np.array([])
    elif correction == "none":
        adj = np.asarray(raw)
    else:
        raise ValueError(f"unknown correction {correction!r}")
    A = np.ones((k, k))
    for (i, j), p, pa in zip(pairs, raw, adj):
        P[i, j] = P[j, i] = p
        A[i, j] = A[j, i] = pa
    return PairwiseTests(dets, P, A)


def cd_data(table: RankTable, tests: PairwiseTests, alpha: float = 0.05) -> dict:
    """Mean ranks (best first) and maximal groups of mutually non-significant detectors."""
    mean = table.mean_ranks
    order = sorted(table.detectors, key=lambda d: (mean[d], d))
    g = nx.Graph()
    g.add_nodes_from(order)
    pos = {d: i for i, d in enumerate(tests.detectors)}
    for a, b in itertools.combinations(order, 2):
        if tests.p_adjusted[pos[a], pos[b]] >= alpha:
            g.add_edge(a, b)
    rank_pos = {d: i for i, d in enumerate(order)}
    cliques = [sorted(c, key=rank_pos.get) for c in nx.find_cliques(g) if len(c) >= 2]
    cliques.sort(key=lambda c: (rank_pos[c[0]], -len(c)))
    return {
        "metric": table.metric,
        "alpha": alpha,
        "detectors": order,
        "mean_ranks": [mean[d] for d in order],
        "cliques": cliques,
    }


def knc_slices(records, metric: str, knc: Optional[dict[str, float]] = None) -> dict:
    """Aggregates restricted to each KNC band, plus ``1 - min/max`` of band means per detector."""
    knc = dict(knc or {})
    for r in records:
        if r.bundle not in knc and r.knc is not None:
            knc[r.bundle] = r.knc
    bands: dict[str, dict] = {}
    notes = []
    for band in KNC_BANDS:
        members = {b for b, v in knc.items() if v is not None and knc_band(v) == band}
        subset = [r for r in records if r.bundle in members]
        if not subset:
            notes.append(f"band {band}: no bundles")
            continue
        bands[band] = {"n_bundles": len(members), "aggregate": aggregate(subset, metric)}
    decline = {}
    for det in _detectors(records):
        means = [b["aggregate"][det]["mean"] for b in bands.values() if det in b["aggregate"]]
        means = [m for m in means if m is not None]
        if means and max(means) > 0:
            decline[det] = 1.0 - min(means) / max(means)
    return {"metric": metric, "bands": bands, "decline_ratio": decline, "notes": notes}


def timing_report(records, seed: int = 0, n_groups: int = 3, group_size: int = 10) -> dict:
    """Mean fit+score seconds per bundle, averaged over fixed random groups of bundles."""
    bundles = _bundles(records)
    rng = np.random.default_rng(seed)
    perm = [bundles[i] for i in rng.permutation(len(bundles))]
    need = n_groups * group_size
    if len(perm) >= need:
        groups = [perm[i * group_size : (i + 1) * group_size] for i in range(n_groups)]
        note = None
    else:
        groups = [perm]
        note = f"only {len(perm)} bundles available; timed all of them as one group"
    per = defaultdict(lambda: defaultdict(list))
    for r in records:
        if r.ok:
            per[r.detector][r.bundle].append(r.wall_time_fit + r.wall_time_score)
    rows = []
    for det, by_bundle in per.items():
        group_means = []
        for grp in groups:
            vals = [float(np.mean(by_bundle[b])) for b in grp if b in by_bundle]
            if vals:
                group_means.append(float(np.mean(vals)))
        if group_means:
            rows.append((det, float(np.mean(group_means))))
    rows.sort(key=lambda t: (t[1], t[0]))
    return {"groups": groups, "seconds": rows, "note": note}


def family_rank_table(records, metric: str) -> RankTable:
    """Rank detector families per bundle by the median of their members' values."""
    vals = bundle_values(records, metric)
    fam_members = defaultdict(list)
    for det in vals:
        fam_members[REGISTRY[det].family].append(det)
    families = sorted(fam_members)
    bundles = [b for b in _bundles(records) if all(any(b in vals[d] for d in fam_members[f]) for f in families)]
    V = np.array(
        [[float(np.median([vals[d][b] for d in fam_members[f] if b in vals[d]])) for b in bundles] for f in families]
    ).reshape(len(families), len(bundles))
    R = rank_matrix(V) if bundles and len(families) > 1 else np.ones_like(V)
    return RankTable(metric, families, bundles, R, V, [])


def quality_report(records, floor: float = 0.8) -> dict:
    """Per bundle: best AUC-ROC and whether the quality floor keeps it."""
    from ..datagen import quality_filter

    by_bundle = defaultdict(dict)
    for r in records:
        v = r.value("auc_roc")
        if v is not None:
            prev = by_bundle[r.bundle].get(r.detector)
            by_bundle[r.bundle][r.detector] = v if prev is None else max(prev, v)
    out = {}
    for b in _bundles(records):
        res = by_bundle.get(b, {})
        out[b] = {
            "best_auc_roc": max(res.values()) if res else None,
            "keep": quality_filter(res, floor) if res else False,
        }
    return out
