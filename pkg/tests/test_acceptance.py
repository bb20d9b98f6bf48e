"""Acceptance criteria 1-10, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py`` (lines appear in the terminal
summary) or ``python tests/test_acceptance.py``.
"""
import itertools
import math
import time
from functools import lru_cache

import numpy as np
import pytest

from tsasd.bench import stats
from tsasd.bench.runner import run_matrix
from tsasd.cli import DEFAULTS, main
from tsasd.core import AnomalyRange, WindowConfig
from tsasd.datagen import DatasetBundle, build_bundle, generate_synthetic_categorical
from tsasd.decision import DecisionModel, decide, default_threshold
from tsasd.detectors import CATALOG_ORDER
from tsasd.difficulty import bundle_difficulty
from tsasd.metrics import auc_roc, vus
from tsasd.preprocess import dewindow
from tsasd.shapedist import sbd

RESULTS: list[str] = []


def record(n, title, ok, detail="", soft=False):
    status = "PASS" if ok else ("SOFT-FAIL" if soft else "FAIL")
    RESULTS.append(f"[{status}] criterion {n}: {title}" + (f" ({detail})" if detail else ""))
    if not soft:
        assert ok, RESULTS[-1]


# -- shared desk-scale data ----------------------------------------------------

DS = DEFAULTS["dataset"]


@lru_cache(maxsize=None)
def desk_data(seed=0):
    return generate_synthetic_categorical(
        DS["n_classes"], DS["per_class"], DS["instance_length"], DS["noise_sigma"], seed,
        amplitude_jitter=DS["amplitude_jitter"], shift_jitter=DS["shift_jitter"],
    )


def desk_bundle(k, band, seed, data_seed=0):
    b = build_bundle(desk_data(data_seed), k, distance_band=band, seed=seed, min_cluster_size=DS["min_cluster_size"])
    b.meta["knc"] = bundle_difficulty(b)["knc"]
    return b


@lru_cache(maxsize=None)
def band_benchmark():
    """Far-band and near-band bundles (same class and seed) scored by every detector."""
    far, near = {}, {}
    for k in range(6):
        far[f"far{k}"] = desk_bundle(k, (0.9, 1.0), seed=k)
        near[f"near{k}"] = desk_bundle(k, (0.0, 0.1), seed=k)
    rf = run_matrix(far, CATALOG_ORDER, ["64"], seed=0)
    rn = run_matrix(near, CATALOG_ORDER, ["64"], seed=0)
    return far, near, rf, rn


# -- oracles -------------------------------------------------------------------


def dewindow_oracle(a, w, n):
    member = np.zeros((n, len(a)))
    for k in range(len(a)):
        member[k : k + w, k] = 1.0
    return member @ a / member.sum(axis=1)


def auc_pairs(s, t):
    pos, neg = s[t == 1], s[t == 0]
    diff = pos[:, None] - neg[None, :]
    return ((diff > 0).sum() + 0.5 * (diff == 0).sum()) / diff.size


def sbd_enum(x, y):
    m = len(x)
    best = -np.inf
    for s in range(-(m - 1), m):
        if s >= 0:
            cc = float(np.dot(x[s:], y[: m - s]))
        else:
            cc = float(np.dot(x[: m + s], y[-s:]))
        best = max(best, cc)
    return 1.0 - best / (np.linalg.norm(x) * np.linalg.norm(y))


def erf_series(x, terms=80):
    return 2 / math.sqrt(math.pi) * sum((-1) ** n * x ** (2 * n + 1) / (math.factorial(n) * (2 * n + 1)) for n in range(terms))


def signed_rank_enum(d):
    from scipy.stats import rankdata

    d = d[d != 0]
    r = rankdata(np.abs(d))
    signs = np.array(list(itertools.product([0, 1], repeat=len(d))))
    sums = signs @ r
    t = r[d > 0].sum()
    return min(1.0, 2 * min(np.mean(sums <= t + 1e-9), np.mean(sums >= t - 1e-9)))


# -- criteria ------------------------------------------------------------------


def test_criterion_01_dewindow_oracle():
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(1, 501))
        w = int(rng.integers(1, n + 1))
        a = rng.normal(size=n - w + 1)
        worst = max(worst, float(np.abs(dewindow(a, WindowConfig(w), n) - dewindow_oracle(a, w, n)).max()))
    dt = time.perf_counter() - t0
    record(1, "dewindow equals membership-average oracle", worst <= 1e-12 and dt < 5, f"max err {worst:.1e}, {dt:.2f}s")


def test_criterion_02_auc_oracle():
    rng = np.random.default_rng(2)
    t0 = time.perf_counter()
    worst_auc = worst_vus = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 201))
        t = rng.integers(0, 2, n)
        t[:2] = [0, 1]
        s = np.round(rng.normal(size=n), 1)
        a = auc_roc(s, t)
        worst_auc = max(worst_auc, abs(a - auc_pairs(s, t)))
        worst_vus = max(worst_vus, abs(vus(s, t, 0, "roc") - a))
    dt = time.perf_counter() - t0
    ok = worst_auc <= 1e-9 and worst_vus <= 1e-9 and dt < 10
    record(2, "auc_roc equals pair counting; vus(L=0) equals auc_roc", ok, f"errs {worst_auc:.1e}/{worst_vus:.1e}, {dt:.2f}s")


def test_criterion_03_decision_constants():
    T = default_threshold()
    oracle = 1 - (1 - erf_series(math.sqrt(2))) / 2
    rng = np.random.default_rng(3)
    mono = True
    for _ in range(10_000):
        mu, sigma = rng.normal(0, 5), rng.uniform(1e-3, 10)
        a1, a2 = np.sort(rng.normal(mu, 5 * sigma, 2))
        m = DecisionModel(mu, sigma)
        mono &= decide(m, a1) <= decide(m, a2)
    at_mu_sigma = decide(DecisionModel(1.5, 0.3), 1.8)
    ok = abs(T - 0.9772498681) <= 1e-9 and abs(T - oracle) <= 1e-9 and at_mu_sigma == 0.0 and mono
    record(3, "threshold constant, D(mu+sigma)=0, D monotone", ok, f"T={T:.10f}")


def test_criterion_04_sbd_oracle():
    rng = np.random.default_rng(4)
    worst, in_range = 0.0, True
    for _ in range(100):
        m = int(rng.integers(1, 257))
        x, y = rng.normal(size=m), rng.normal(size=m)
        fast = sbd(x, y, "fft")
        worst = max(worst, abs(fast - sbd_enum(x, y)))
        in_range &= 0.0 <= fast <= 2.0
    x = rng.normal(size=100)
    ok = worst <= 1e-9 and in_range and sbd(x, x) == 0.0
    record(4, "SBD fast path equals shift enumeration", ok, f"max err {worst:.1e}")


def test_criterion_05_statistics_oracles():
    R = np.tile([[1.0], [2.0]], (1, 10))
    chi, _ = stats.friedman(stats.RankTable("m", ["A", "B"], [str(i) for i in range(10)], R, R, []))
    rng = np.random.default_rng(5)
    worst = 0.0
    for n in range(1, 13):
        for _ in range(5):
            d = np.round(rng.normal(0.2, 1, n), 1)
            if not d.any():
                continue
            worst = max(worst, abs(stats.signed_rank_exact(d) - signed_rank_enum(d)))
    ok = abs(chi - 10.0) <= 1e-9 and worst <= 1e-12
    record(5, "Friedman chi2=10; exact Wilcoxon equals 2^n enumeration", ok, f"chi2={chi}, max err {worst:.1e}")


def test_criterion_06_desk_benchmark():
    t0 = time.perf_counter()
    bundles, k, seed = {}, 0, 0
    while len(bundles) < 10 and seed < 60:
        b = desk_bundle(seed % 6, tuple(DS["distance_band"]), seed=seed)
        if b.meta["knc"] is not None and b.meta["knc"] > 10:
            bundles[f"b{seed:02d}"] = b
        seed += 1
    recs = run_matrix(bundles, ["KNN", "LOF", "Sampling"], DEFAULTS["windows"], seed=0)
    agg = stats.aggregate(recs, "auc_roc")
    dt = time.perf_counter() - t0
    means = {d: agg[d]["mean"] for d in ("KNN", "LOF", "Sampling")}
    ok = len(bundles) == 10 and all(m is not None and m >= 0.90 for m in means.values()) and dt < 120
    detail = ", ".join(f"{d} {m:.3f}" for d, m in means.items()) + f"; {dt:.1f}s"
    record(6, "KNN/LOF/Sampling mean AUC-ROC >= 0.90 on 10 bundles with KNC > 10", ok, detail)


def test_criterion_07_difficulty_ordering():
    far, near, rf, rn = band_benchmark()
    knc_ok = all(far[f"far{k}"].meta["knc"] > near[f"near{k}"].meta["knc"] for k in range(6))
    af, an = stats.aggregate(rf, "auc_roc"), stats.aggregate(rn, "auc_roc")
    worst = min((af[d]["mean"] - an[d]["mean"], d) for d in CATALOG_ORDER)
    errors = [r for r in rf + rn if r.error]
    ok = knc_ok and worst[0] >= -0.05 and not errors
    record(7, "far-band KNC > near-band KNC; far AUC >= near AUC - 0.05 for all detectors", ok,
           f"smallest far-near gap {worst[0]:+.3f} ({worst[1]})")


def test_criterion_08_determinism(tmp_path):
    outs = []
    for run in ("a", "b"):
        root = tmp_path / run
        assert main(["build-dataset", "--out", str(root / "ds"), "--count", "2", "--seed", "5"]) == 0
        cfg = root / "cfg.yaml"
        cfg.write_text("bench:\n  record_timing: false\n")
        assert main(["bench", str(root / "ds" / "*"), "--out", str(root / "out"), "--config", str(cfg),
                     "--detector", "KNN", "--detector", "IForest", "--window", "32", "--seed", "5"]) == 0
        files = sorted(p.relative_to(root) for p in root.rglob("*") if p.suffix in (".csv", ".json") and "cache" not in p.parts)
        outs.append({str(f): (root / f).read_bytes() for f in files})
    # timed run: repeating into the same directory reuses cached cells
    timed = tmp_path / "timed"
    args = ["bench", str(tmp_path / "a" / "ds" / "*"), "--out", str(timed), "--detector", "KNN", "--window", "32"]
    main(args)
    first = {p.name: p.read_bytes() for p in timed.iterdir() if p.suffix in (".csv", ".json")}
    main(args)
    second = {p.name: p.read_bytes() for p in timed.iterdir() if p.suffix in (".csv", ".json")}
    ok = outs[0] == outs[1] and len(outs[0]) >= 12 and first == second
    record(8, "build-dataset and bench reruns are byte-identical", ok, f"{len(outs[0])} files compared")


def test_criterion_09_quality_filter():
    good = desk_bundle(0, (0.25, 0.75), seed=0)
    clean = build_bundle(desk_data(0), 0, anomaly_count=0, seed=0, min_cluster_size=DS["min_cluster_size"])
    m = clean.meta["instance_length"]
    # label an ordinary instance as anomalous: no detector can single it out
    pos = clean.test.n // m // 2
    meta = dict(clean.meta, anomaly_positions=[pos])
    bad = DatasetBundle(clean.standard, clean.test, [AnomalyRange(pos * m, pos * m + m - 1)], meta)
    recs = run_matrix({"good": good, "bad": bad}, ["KNN", "HBOS", "IForest"], ["64"], seed=0)
    q = stats.quality_report(recs)
    ok = q["good"]["keep"] and not q["bad"]["keep"]
    record(9, "bundle with all AUC-ROC < 0.8 dropped; bundle with one >= 0.8 kept", ok,
           f"best AUC good {q['good']['best_auc_roc']:.3f}, bad {q['bad']['best_auc_roc']:.3f}")


def test_criterion_10_family_ranks():
    _, _, rf, rn = band_benchmark()
    fam = stats.family_rank_table(rf + rn, "auc_roc").mean_ranks
    prox, statm = fam["proximity-based"], fam["statistical-model-based"]
    record(10, "proximity-based family ranks ahead of statistical-model-based (soft)", prox < statm,
           f"{prox:.2f} vs {statm:.2f}", soft=True)


if __name__ == "__main__":
    import tempfile
    from pathlib import Path

    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion"):
            try:
                if "tmp_path" in fn.__code__.co_varnames[: fn.__code__.co_argcount]:
                    fn(Path(tempfile.mkdtemp()))
                else:
                    fn()
            except AssertionError:
                pass
    print("\n".join(RESULTS))
