"""Summaries of run records as JSON, Markdown and SVG."""
from __future__ import annotations

import io
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from ..io import atomic_write, dumps_json
from ..metrics import METRIC_NAMES, METRIC_TITLES
from . import stats

PRIMARY_METRIC = "auc_roc"


def _r(x, nd=6):
    return None if x is None else round(float(x), nd)


def build_summary(
    records,
    alpha: float = 0.05,
    wilcoxon_method: str = "auto",
    exact_below: int = 6,
    correction: str = "holm",
    quality_floor: float = 0.8,
) -> dict:
    """Everything except timings, so it is reproducible from the metric values alone."""
    dets = sorted({r.detector for r in records})
    table = {}
    for det in dets:
        table[det] = {}
    for metric in METRIC_NAMES:
        agg = stats.aggregate(records, metric)
        for det in dets:
            table[det][metric] = _r(agg[det]["mean"])
    counts = {d: stats.aggregate(records, PRIMARY_METRIC)[d]["n"] for d in dets}

    out = {
        "detectors": dets,
        "bundles": sorted({r.bundle for r in records}),
        "windows": sorted({r.window for r in records}),
        "metrics": table,
        "bundle_counts": counts,
        "errors": [
            {"bundle": r.bundle, "detector": r.detector, "window": r.window, "error": r.error}
            for r in records
            if r.error
        ],
        "quality": stats.quality_report(records, quality_floor),
        "quality_floor": quality_floor,
    }
    if len(dets) >= 2:
        ranks, fried = {}, {}
        for metric in METRIC_NAMES:
            try:
                rt = stats.rank_table(records, metric)
            except ValueError:
                continue
            ranks[metric] = {d: _r(v) for d, v in rt.mean_ranks.items()} if rt.bundles else {}
            chi, p = stats.friedman(rt)
            fried[metric] = {"chi2": _r(chi, 9), "p": _r(p, 9), "n_bundles": len(rt.bundles), "dropped": rt.dropped_bundles}
        out["mean_ranks"] = ranks
        out["friedman"] = fried
        rt = stats.rank_table(records, PRIMARY_METRIC)
        tests = stats.wilcoxon_pairs(records, PRIMARY_METRIC, wilcoxon_method, exact_below, correction)
        cd = stats.cd_data(rt, tests, alpha) if rt.bundles else {"detectors": [], "mean_ranks": [], "cliques": []}
        cd["mean_ranks"] = [_r(v) for v in cd["mean_ranks"]]
        out["cd"] = cd
        out["wilcoxon"] = {
            "detectors": tests.detectors,
            "correction": correction,
            "p_adjusted": [[_r(v, 9) for v in row] for row in tests.p_adjusted],
        }
        fam = stats.family_rank_table(records, PRIMARY_METRIC)
        out["family_ranks"] = {f: _r(v) for f, v in fam.mean_ranks.items()} if fam.bundles else {}
    slices = stats.knc_slices(records, PRIMARY_METRIC)
    out["knc_slices"] = {
        "metric": PRIMARY_METRIC,
        "bands": {
            b: {"n_bundles": v["n_bundles"], "means": {d: _r(a["mean"]) for d, a in v["aggregate"].items()}}
            for b, v in slices["bands"].items()
        },
        "decline_ratio": {d: _r(v) for d, v in slices["decline_ratio"].items()},
        "notes": slices["notes"],
    }
    return out


def _md_table(header: Sequence[str], rows: Sequence[Sequence]) -> list[str]:
    cell = lambda v: "-" if v is None else (f"{v:.4f}" if isinstance(v, float) else str(v))
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    lines += ["| " + " | ".join(cell(v) for v in row) + " |" for row in rows]
    return lines


def render_markdown(summary: dict, timing: Optional[dict] = None) -> str:
    dets = summary["detectors"]
    lines = ["# Benchmark report", ""]
    lines.append(
        f"{len(summary['bundles'])} bundles, {len(dets)} detectors, window configs: {', '.join(summary['windows'])}."
    )
    lines += ["", "## Mean metric values", ""]
    lines += _md_table(["Detector", *METRIC_TITLES], [[d, *(summary["metrics"][d][m] for m in METRIC_NAMES)] for d in dets])

    if "mean_ranks" in summary:
        lines += ["", "## Mean ranks (1 = best)", ""]
        lines += _md_table(
            ["Detector", *METRIC_TITLES],
            [[d, *(summary["mean_ranks"].get(m, {}).get(d) for m in METRIC_NAMES)] for d in dets],
        )
        lines += ["", "## Friedman test", ""]
        lines += _md_table(
            ["Metric", "chi2", "p", "bundles"],
            [[t, summary["friedman"][m]["chi2"], summary["friedman"][m]["p"], summary["friedman"][m]["n_bundles"]]
             for m, t in zip(METRIC_NAMES, METRIC_TITLES) if m in summary["friedman"]],
        )
        cd = summary["cd"]
        lines += ["", f"## Critical difference groups (AUC-ROC, {summary['wilcoxon']['correction']}, alpha={cd.get('alpha', 0.05)})", ""]
        if cd["cliques"]:
            lines += [f"- {', '.join(c)}" for c in cd["cliques"]]
        else:
            lines.append("No pair of detectors is statistically indistinguishable.")
        if summary.get("family_ranks"):
            lines += ["", "## Family mean ranks (AUC-ROC, median per family)", ""]
            lines += _md_table(["Family", "Mean rank"], sorted(summary["family_ranks"].items(), key=lambda t: t[1]))

    ks = summary["knc_slices"]
    lines += ["", "## AUC-ROC by KNC band", ""]
    bands = list(ks["bands"])
    if bands:
        lines += _md_table(
            ["Detector", *(f"{b} (n={ks['bands'][b]['n_bundles']})" for b in bands), "Decline ratio"],
            [[d, *(ks["bands"][b]["means"].get(d) for b in bands), ks["decline_ratio"].get(d)] for d in dets],
        )
    lines += [f"- {n}" for n in ks["notes"]]

    if timing is not None:
        lines += ["", "## Mean fit+score time per bundle (seconds)", ""]
        lines += _md_table(["Detector", "Seconds"], [[d, float(s)] for d, s in timing["seconds"]])
        if timing.get("note"):
            lines.append(f"\nNote: {timing['note']}")

    floor = summary["quality_floor"]
    dropped = [b for b, q in summary["quality"].items() if not q["keep"]]
    lines += ["", f"## Quality filter (best AUC-ROC below {floor})", ""]
    lines += [f"- dropped: {b}" for b in dropped] or ["No bundle falls below the floor."]
    if summary["errors"]:
        lines += ["", "## Failed cells", ""]
        lines += [f"- {e['bundle']} / {e['detector']} / {e['window']}: {e['error']}" for e in summary["errors"]]
    return "\n".join(lines) + "\n"


def _svg(fig) -> str:
    import matplotlib.pyplot as plt

    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    return buf.getvalue()


def _matplotlib():
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "tsasd"
    import matplotlib.pyplot as plt

    return plt


def boxplot_svg(records, metric: str = PRIMARY_METRIC) -> str:
    plt = _matplotlib()
    vals = stats.bundle_values(records, metric)
    dets = sorted(vals)
    fig, ax = plt.subplots(figsize=(max(4, 0.5 * len(dets) + 2), 4))
    if dets:
        ax.boxplot([list(vals[d].values()) for d in dets], tick_labels=dets)
    ax.set_ylabel(METRIC_TITLES[METRIC_NAMES.index(metric)])
    ax.tick_params(axis="x", rotation=60)
    fig.tight_layout()
    return _svg(fig)


def cd_svg(cd: dict) -> str:
    """Mean-rank axis with detectors marked and one bar per non-significant clique."""
    plt = _matplotlib()
    dets, ranks = cd["detectors"], cd["mean_ranks"]
    k = max(len(dets), 2)
    fig, ax = plt.subplots(figsize=(8, 1.5 + 0.3 * len(dets) + 0.2 * len(cd["cliques"])))
    ax.set_xlim(k + 0.5, 0.5)  # rank 1 on the right
    ax.set_ylim(-0.5 - 0.3 * len(cd["cliques"]), len(dets) + 0.5)
    ax.set_xlabel("mean rank")
    ax.get_yaxis().set_visible(False)
    for i, (d, r) in enumerate(zip(dets, ranks)):
        y = len(dets) - i
        ax.plot([r, r], [0, y], color="0.6", lw=0.8)
        ax.text(r, y, f" {d} ({r:.2f})", va="center", fontsize=8)
    pos = dict(zip(dets, ranks))
    for j, clique in enumerate(cd["cliques"]):
        rs = [pos[d] for d in clique]
        y = -0.3 * (j + 1)
        ax.plot([min(rs), max(rs)], [y, y], color="k", lw=3)
    fig.tight_layout()
    return _svg(fig)


def write_report(records, out_dir, timing: Optional[dict] = None, **summary_kwargs) -> dict:
    """Write summary.json, report.md and the SVG figures; return the summary."""
    out = Path(out_dir)
    summary = build_summary(records, **summary_kwargs)
    atomic_write(out / "summary.json", dumps_json(summary))
    if timing is not None:
        atomic_write(out / "timing.json", dumps_json(timing))
    atomic_write(out / "report.md", render_markdown(summary, timing))
    atomic_write(out / "boxplot_auc_roc.svg", boxplot_svg(records))
    if "cd" in summary:
        atomic_write(out / "cd_diagram.svg", cd_svg(summary["cd"]))
    return summary
