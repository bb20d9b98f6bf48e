"""Command-line interface.

Exit codes: 0 success (``detect``: no anomaly), 1 usage or configuration
error, 2 data error, 3 ``detect`` found at least one anomalous point.
"""
from __future__ import annotations

import argparse
import copy
import glob
import json
import sys
import time
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .bench import CellCache, MetricParams, records_from_json, records_to_csv, records_to_json, run_matrix
from .bench.report import write_report
from .bench.stats import timing_report
from .core import ValidationError, WindowConfig, labels_to_ranges
from .datagen import build_bundle, generate_synthetic_categorical, read_categorical_csv
from .detectors import CATALOG_ORDER, DetectorSpec
from .detectors.base import DetectorError
from .difficulty import bundle_difficulty
from .io import DataError, atomic_write, bundle_digest, dumps_json, read_bundle, read_labels_csv, read_series_csv, read_vector_csv, write_bundle, write_columns
from .metrics import METRIC_NAMES, auc_pr, auc_roc, point_prf, range_f1, vus
from .pipeline import PipelineConfig, run

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_ANOMALY = 0, 1, 2, 3

DEFAULTS = {
    "seed": 0,
    "split_fraction": 0.7,
    "threshold": None,
    "windows": ["64"],
    "detectors": ["KNN"],
    "detector_params": {},
    "metrics": {"range_alpha": 0.5, "range_bias": "flat", "vus_buffer": None, "knc_k": 5},
    "dataset": {
        "source": None,
        "n_classes": 6,
        "per_class": 100,
        "instance_length": 64,
        "noise_sigma": 0.1,
        "amplitude_jitter": 0.15,
        "shift_jitter": 0.05,
        "source_class": 0,
        "n_clusters": 3,
        "min_cluster_size": 12,
        "anomaly_count": None,
        "distance_band": [0.25, 0.75],
    },
    "difficulty": {"K_nor": 3, "K_ano": 3},
    "stats": {"alpha": 0.05, "correction": "holm", "wilcoxon_method": "auto", "exact_below": 6, "quality_floor": 0.8},
    "bench": {"jobs": 1, "cache": True, "record_timing": True},
}


class ConfigError(ValueError):
    pass


class UsageError(Exception):
    pass


def _flatten(d: dict, prefix: str = "") -> list[tuple[str, object]]:
    out = []
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict) and v:
            out += _flatten(v, key + ".")
        else:
            out.append((key, v))
    return out


def _merge(base: dict, override: dict, path: str = "") -> dict:
    for k, v in override.items():
        where = f"{path}{k}"
        if k not in base:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(base[k], dict) and k != "detector_params":
            if not isinstance(v, dict):
                raise ConfigError(f"config key {where!r} must be a mapping")
            _merge(base[k], v, where + ".")
        else:
            base[k] = v
    return base


def load_config(path=None, overrides: dict | None = None) -> dict:
    """Defaults, then the YAML file at ``path``, then command-line overrides."""
    cfg = copy.deepcopy(DEFAULTS)
    if path is not None:
        try:
            data = yaml.safe_load(Path(path).read_text())
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        except OSError as exc:
            raise ConfigError(f"{path}: {exc.strerror}") from None
        if data is not None:
            if not isinstance(data, dict):
                raise ConfigError(f"{path}: top level must be a mapping")
            _merge(cfg, data)
    _merge(cfg, {k: v for k, v in (overrides or {}).items() if v is not None})
    validate_config(cfg)
    return cfg


def _parse_detector(text: str, params: dict) -> DetectorSpec:
    """``ID`` or ``ID:key=value,key=value``; config ``detector_params`` fill in the rest."""
    ident, _, rest = text.partition(":")
    merged = dict(params.get(ident, {}))
    for item in filter(None, rest.split(",")):
        key, eq, value = item.partition("=")
        if not eq:
            raise ConfigError(f"bad detector parameter {item!r}; expected key=value")
        merged[key.strip()] = yaml.safe_load(value)
    return DetectorSpec(ident.strip(), merged)


def validate_config(cfg: dict) -> None:
    try:
        if not 0.0 < float(cfg["split_fraction"]) < 1.0:
            raise ConfigError("split_fraction must lie in (0, 1)")
        if not cfg["windows"] or not cfg["detectors"]:
            raise ConfigError("windows and detectors must be non-empty lists")
        for w in cfg["windows"]:
            WindowConfig.parse(str(w))
        if not isinstance(cfg["detector_params"], dict):
            raise ConfigError("detector_params must map detector ids to mappings")
        for d in cfg["detectors"]:
            _parse_detector(str(d), cfg["detector_params"])
        band = cfg["dataset"]["distance_band"]
        if len(band) != 2:
            raise ConfigError("dataset.distance_band must have two entries")
        if cfg["stats"]["correction"] not in ("holm", "none"):
            raise ConfigError("stats.correction must be 'holm' or 'none'")
        if cfg["stats"]["wilcoxon_method"] not in ("auto", "exact", "normal"):
            raise ConfigError("stats.wilcoxon_method must be auto, exact or normal")
        if int(cfg["bench"]["jobs"]) < 1:
            raise ConfigError("bench.jobs must be >= 1")
    except ValidationError as exc:
        raise ConfigError(str(exc)) from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid config value: {exc}") from None


def _specs(cfg):
    return [_parse_detector(str(d), cfg["detector_params"]) for d in cfg["detectors"]]


def _metric_params(cfg) -> MetricParams:
    m = cfg["metrics"]
    return MetricParams(m["vus_buffer"], float(m["range_alpha"]), m["range_bias"])


# ---------------------------------------------------------------- commands


def cmd_build_dataset(cfg: dict, out_dir, count: int = 1) -> list[dict]:
    ds = cfg["dataset"]
    if ds["source"]:
        data = read_categorical_csv(ds["source"])
    else:
        data = generate_synthetic_categorical(
            n_classes=int(ds["n_classes"]),
            per_class=int(ds["per_class"]),
            m=int(ds["instance_length"]),
            noise_sigma=float(ds["noise_sigma"]),
            amplitude_jitter=float(ds["amplitude_jitter"]),
            shift_jitter=float(ds["shift_jitter"]),
            seed=int(cfg["seed"]),
        )
    classes = [int(c) for c in data.classes]
    first = classes.index(int(ds["source_class"])) if int(ds["source_class"]) in classes else None
    if first is None:
        raise ValidationError(f"source_class {ds['source_class']} not in data classes {classes}")
    out = Path(out_dir)
    written = []
    for i in range(count):
        k = classes[(first + i) % len(classes)]
        seed = int(cfg["seed"]) + i
        name = out.name if count == 1 else f"bundle_{i:03d}"
        bundle = build_bundle(
            data,
            k,
            n_clusters=int(ds["n_clusters"]),
            anomaly_count=ds["anomaly_count"],
            distance_band=tuple(float(v) for v in ds["distance_band"]),
            seed=seed,
            name=name,
            min_cluster_size=int(ds["min_cluster_size"]),
        )
        if bundle.truth:
            bundle.meta["knc"] = bundle_difficulty(bundle, k=int(cfg["metrics"]["knc_k"]))["knc"]
        target = out if count == 1 else out / name
        write_bundle(bundle, target)
        written.append({"path": str(target), "knc": bundle.meta["knc"]})
    return written


def cmd_detect(standard_path, test_path, cfg: dict, out_dir) -> int:
    standard = read_series_csv(standard_path, "standard")
    test_series = read_series_csv(test_path, "test")
    spec = _specs(cfg)[0]
    spec = DetectorSpec(spec.id, spec.params, int(cfg["seed"]))
    pcfg = PipelineConfig(
        WindowConfig.parse(str(cfg["windows"][0])),
        spec,
        float(cfg["split_fraction"]),
        int(cfg["seed"]),
        cfg["threshold"],
    )
    scores, health, labels = run(standard, test_series, pcfg)
    out = Path(out_dir)
    write_columns(out / "scores.csv", ["score"], [scores])
    write_columns(out / "health.csv", ["health"], [health])
    write_columns(out / "labels.csv", ["label"], [labels])
    n_anom = int(np.sum(labels))
    print(f"{n_anom} anomalous points in {len(labels)}; ranges: {[(r.start, r.end) for r in labels_to_ranges(labels)]}")
    return EXIT_ANOMALY if n_anom else EXIT_OK


def _bundle_dirs(pattern: str) -> list[Path]:
    dirs = sorted({Path(p) for p in glob.glob(pattern) if (Path(p) / "meta.json").exists()})
    if not dirs:
        raise DataError(f"no bundle directories match {pattern!r}")
    names = [d.name for d in dirs]
    if len(set(names)) != len(names):
        raise DataError("bundle directory names must be unique")
    return dirs


def cmd_bench(pattern: str, cfg: dict, out_dir) -> dict:
    out = Path(out_dir)
    dirs = _bundle_dirs(pattern)
    bundles, digests = {}, {}
    for d in dirs:
        b = read_bundle(d)
        if b.meta.get("knc") is None and b.truth and "anomaly_positions" in b.meta:
            b.meta["knc"] = bundle_difficulty(b, k=int(cfg["metrics"]["knc_k"]))["knc"]
        bundles[d.name] = b
        digests[d.name] = bundle_digest(d)
    bc = cfg["bench"]
    clock = time.perf_counter if bc["record_timing"] else (lambda: 0.0)
    cache = CellCache(out / "cache") if bc["cache"] else None
    records = run_matrix(
        bundles,
        _specs(cfg),
        [str(w) for w in cfg["windows"]],
        seed=int(cfg["seed"]),
        split_fraction=float(cfg["split_fraction"]),
        metric_params=_metric_params(cfg),
        jobs=int(bc["jobs"]),
        clock=clock,
        cache=cache,
        digests=digests,
    )
    records_to_csv(records, out / "results.csv")
    records_to_json(records, out / "results.json")
    return _report(records, cfg, out)


def _report(records, cfg, out) -> dict:
    st = cfg["stats"]
    timing = timing_report(records, seed=int(cfg["seed"]))
    return write_report(
        records,
        out,
        timing,
        alpha=float(st["alpha"]),
        wilcoxon_method=st["wilcoxon_method"],
        exact_below=int(st["exact_below"]),
        correction=st["correction"],
        quality_floor=float(st["quality_floor"]),
    )


def cmd_report(results_path, cfg: dict, out_dir) -> dict:
    path = Path(results_path)
    if path.is_dir():
        path = path / "results.json"
    try:
        records = records_from_json(path)
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise DataError(f"{path}: not a results file ({exc})") from None
    if not records:
        raise DataError(f"{path}: no records")
    return _report(records, cfg, Path(out_dir))


def cmd_evaluate(scores_path, labels_path, cfg: dict, pred_path=None) -> dict:
    scores = read_vector_csv(scores_path)
    truth = read_labels_csv(labels_path)
    if scores.shape[0] != truth.shape[0]:
        raise DataError(f"{scores_path} has {scores.shape[0]} rows, {labels_path} has {truth.shape[0]}")
    m = cfg["metrics"]
    buffer = 16 if m["vus_buffer"] is None else int(m["vus_buffer"])
    result = dict.fromkeys(METRIC_NAMES)
    if pred_path is not None:
        pred = read_labels_csv(pred_path)
        if pred.shape[0] != truth.shape[0]:
            raise DataError(f"{pred_path} has {pred.shape[0]} rows, {labels_path} has {truth.shape[0]}")
        result["precision"], result["recall"], result["f1"] = point_prf(pred, truth)
        result["range_f1"] = range_f1(pred, truth, alpha=float(m["range_alpha"]), bias=m["range_bias"])
    result["auc_roc"] = auc_roc(scores, truth)
    result["auc_pr"] = auc_pr(scores, truth)
    result["vus_roc"] = vus(scores, truth, buffer, "roc")
    result["vus_pr"] = vus(scores, truth, buffer, "pr")
    return {k: (None if v is None else float(v)) for k, v in result.items()}


def cmd_difficulty(bundle_path, cfg: dict) -> dict:
    b = read_bundle(bundle_path)
    if "anomaly_positions" not in b.meta or "instance_length" not in b.meta:
        raise DataError(f"{bundle_path}: meta.json lacks instance_length/anomaly_positions")
    d = cfg["difficulty"]
    res = bundle_difficulty(b, int(cfg["metrics"]["knc_k"]), int(d["K_nor"]), int(d["K_ano"]), int(cfg["seed"]))
    return {k: (None if v is None else float(v)) for k, v in res.items()}


# ---------------------------------------------------------------- parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _epilog() -> str:
    lines = ["configuration keys (YAML file via --config; defaults shown):"]
    lines += [f"  {k} = {json.dumps(v)}" for k, v in _flatten(DEFAULTS)]
    lines.append(f"detectors: {', '.join(CATALOG_ORDER)}")
    lines.append("windows: an integer length, 'acf' or 'fft'")
    lines.append("exit codes: 0 ok / no anomaly, 1 usage, 2 data error, 3 anomaly detected")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="global seed (config: seed)")
    common.add_argument("--config", help="YAML configuration file")
    common.add_argument("--out", help="output directory")
    common.add_argument("--window", action="append", help="window config; repeatable (config: windows)")
    common.add_argument(
        "--detector", action="append", help="detector id, optionally ID:key=value,...; repeatable (config: detectors)"
    )
    common.add_argument("--jobs", type=int, help="parallel bench cells (config: bench.jobs)")

    kw = dict(formatter_class=argparse.RawDescriptionHelpFormatter, epilog=_epilog())
    p = _Parser(prog="tsasd", description="One-class time-series anomaly state detection.", **kw)
    p.add_argument("--version", action="version", version=f"tsasd {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("build-dataset", parents=[common], help="build standard/test bundle(s)", **kw)
    s.add_argument("--count", type=int, default=1, help="number of bundles (one subdirectory each when > 1)")

    s = sub.add_parser("detect", parents=[common], help="train on a standard series and judge a test series", **kw)
    s.add_argument("standard")
    s.add_argument("test")

    s = sub.add_parser("bench", parents=[common], help="run the detector x bundle x window matrix", **kw)
    s.add_argument("bundles", help="glob matching bundle directories (quote it)")

    s = sub.add_parser("evaluate", parents=[common], help="metrics for a score file against labels", **kw)
    s.add_argument("scores")
    s.add_argument("labels")
    s.add_argument("--pred", help="predicted 0/1 labels for the threshold-based metrics")

    s = sub.add_parser("difficulty", parents=[common], help="KNC/RC/NC/NA of a bundle", **kw)
    s.add_argument("bundle")

    s = sub.add_parser("report", parents=[common], help="render results.json to Markdown/SVG", **kw)
    s.add_argument("results", help="results.json or a bench output directory")
    return p


def _emit(obj, out_dir, filename) -> None:
    text = dumps_json(obj)
    if out_dir:
        atomic_write(Path(out_dir) / filename, text)
    sys.stdout.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        overrides = {"seed": args.seed, "windows": args.window, "detectors": args.detector}
        if args.jobs is not None:
            overrides["bench"] = {"jobs": args.jobs}
        cfg = load_config(args.config, overrides)
        if args.command in ("build-dataset", "detect", "bench", "report") and not args.out:
            raise UsageError(f"{args.command} requires --out")
        if args.command == "build-dataset":
            if args.count < 1:
                raise UsageError("--count must be >= 1")
            for item in cmd_build_dataset(cfg, args.out, args.count):
                knc = item["knc"]
                print(f"{item['path']}: KNC = {'undefined' if knc is None else f'{knc:.4f}'}")
            return EXIT_OK
        if args.command == "detect":
            return cmd_detect(args.standard, args.test, cfg, args.out)
        if args.command == "bench":
            summary = cmd_bench(args.bundles, cfg, args.out)
            print(f"{len(summary['bundles'])} bundles x {len(summary['detectors'])} detectors; report at {Path(args.out) / 'report.md'}")
            return EXIT_OK
        if args.command == "report":
            cmd_report(args.results, cfg, args.out)
            print(f"report at {Path(args.out) / 'report.md'}")
            return EXIT_OK
        if args.command == "evaluate":
            _emit(cmd_evaluate(args.scores, args.labels, cfg, args.pred), args.out, "metrics.json")
            return EXIT_OK
        if args.command == "difficulty":
            _emit(cmd_difficulty(args.bundle, cfg), args.out, "difficulty.json")
            return EXIT_OK
    except (ConfigError, UsageError) as exc:
        print(f"tsasd: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValidationError, DetectorError, OSError) as exc:
        msg = exc.strerror + f": {exc.filename}" if isinstance(exc, OSError) and exc.strerror else str(exc)
        print(f"tsasd: error: {msg}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
