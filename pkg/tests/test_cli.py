import json

import numpy as np
import pytest

from conftest import sine_series
from tsasd.cli import DEFAULTS, _flatten, build_parser, load_config, main, ConfigError
from tsasd.core import TimeSeries
from tsasd.io import write_series_csv


def write_yaml(path, text):
    path.write_text(text)
    return str(path)


def test_help_lists_every_config_key(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--help"])
    assert exc.value.code == 0
    out = capsys.readouterr().out
    for key, value in _flatten(DEFAULTS):
        assert f"{key} = {json.dumps(value)}" in out
    for cmd in ("build-dataset", "detect", "bench", "evaluate", "difficulty", "report"):
        assert cmd in out


def test_config_rejects_unknown_keys(tmp_path):
    with pytest.raises(ConfigError):
        load_config(write_yaml(tmp_path / "c.yaml", "sed: 1\n"))
    with pytest.raises(ConfigError):
        load_config(write_yaml(tmp_path / "c.yaml", "metrics:\n  vus: 3\n"))
    with pytest.raises(ConfigError):
        load_config(write_yaml(tmp_path / "c.yaml", "detectors: [Nope]\n"))
    cfg = load_config(write_yaml(tmp_path / "c.yaml", "metrics:\n  vus_buffer: 3\ndetector_params:\n  KNN: {k: 3}\n"))
    assert cfg["metrics"]["vus_buffer"] == 3 and cfg["metrics"]["range_alpha"] == 0.5
    assert main(["difficulty", "x", "--config", str(tmp_path / "missing.yaml")]) == 1


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["detect", "only-one"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 1
    assert main(["build-dataset"]) == 1  # --out missing
    assert main(["build-dataset", "--out", "x", "--detector", "KNN:k=0"]) == 1


def test_build_dataset(tmp_path, capsys):
    out = tmp_path / "ds"
    assert main(["build-dataset", "--out", str(out), "--seed", "3"]) == 0
    assert sorted(p.name for p in out.iterdir()) == ["labels.csv", "meta.json", "standard.csv", "test.csv"]
    assert "KNC" in capsys.readouterr().out
    out2 = tmp_path / "rerun" / "ds"  # bundle name follows the directory name
    main(["build-dataset", "--out", str(out2), "--seed", "3"])
    for name in ("labels.csv", "meta.json", "standard.csv", "test.csv"):
        assert (out / name).read_bytes() == (out2 / name).read_bytes()
    cfg = write_yaml(tmp_path / "c.yaml", "dataset:\n  anomaly_count: 0\n")
    assert main(["build-dataset", "--out", str(tmp_path / "z"), "--config", cfg]) == 0
    labels = (tmp_path / "z" / "labels.csv").read_text().split()[1:]
    assert set(labels) == {"0"}
    assert main(["build-dataset", "--out", str(tmp_path / "many"), "--count", "3"]) == 0
    assert sorted(p.name for p in (tmp_path / "many").iterdir()) == ["bundle_000", "bundle_001", "bundle_002"]


@pytest.fixture
def sine_files(tmp_path):
    s = sine_series(1000, seed=0)
    write_series_csv(tmp_path / "standard.csv", s)
    write_series_csv(tmp_path / "prefix.csv", s.slice(0, 300))
    vals = s.values[:300].copy()
    vals[120:170] = 20.0
    write_series_csv(tmp_path / "injected.csv", TimeSeries(vals))
    return tmp_path


def test_detect_exit_codes(sine_files):
    d = sine_files
    args = ["--window", "25", "--seed", "0"]
    assert main(["detect", str(d / "standard.csv"), str(d / "prefix.csv"), "--out", str(d / "o1"), *args]) == 0
    assert main(["detect", str(d / "standard.csv"), str(d / "injected.csv"), "--out", str(d / "o2"), *args]) == 3
    for name in ("scores.csv", "health.csv", "labels.csv"):
        assert len((d / "o2" / name).read_text().splitlines()) == 301
    labels = np.loadtxt(d / "o2" / "labels.csv", skiprows=1)
    assert labels[120:170].sum() > 0


def test_detect_malformed_csv(sine_files, capsys):
    bad = sine_files / "bad.csv"
    bad.write_text("dim0\n0.1\n0.2\nzzz\n0.4\n")
    code = main(["detect", str(sine_files / "standard.csv"), str(bad), "--out", str(sine_files / "o")])
    assert code == 2
    assert "bad.csv:4" in capsys.readouterr().err
    assert main(["detect", str(sine_files / "nope.csv"), str(bad), "--out", str(sine_files / "o")]) == 2


def test_evaluate_and_difficulty(tmp_path, capsys):
    main(["build-dataset", "--out", str(tmp_path / "b"), "--seed", "1"])
    main(["detect", str(tmp_path / "b" / "standard.csv"), str(tmp_path / "b" / "test.csv"), "--out", str(tmp_path / "d")])
    capsys.readouterr()
    code = main(["evaluate", str(tmp_path / "d" / "scores.csv"), str(tmp_path / "b" / "labels.csv"),
                 "--pred", str(tmp_path / "d" / "labels.csv"), "--out", str(tmp_path / "e")])
    assert code == 0
    res = json.loads(capsys.readouterr().out)
    assert set(res) == {"precision", "recall", "f1", "range_f1", "auc_roc", "auc_pr", "vus_roc", "vus_pr"}
    assert res["auc_roc"] > 0.9
    assert json.loads((tmp_path / "e" / "metrics.json").read_text()) == res
    assert main(["difficulty", str(tmp_path / "b")]) == 0
    diff = json.loads(capsys.readouterr().out)
    meta = json.loads((tmp_path / "b" / "meta.json").read_text())
    assert diff["knc"] == pytest.approx(meta["knc"])


def bench_args(pattern, out, *extra):
    return ["bench", pattern, "--out", str(out), "--detector", "KNN", "--detector", "HBOS", "--window", "32", *extra]


def test_bench_and_report(tmp_path, capsys):
    main(["build-dataset", "--out", str(tmp_path / "ds"), "--count", "2"])
    assert main(bench_args(str(tmp_path / "ds" / "*"), tmp_path / "out")) == 0
    out = tmp_path / "out"
    for name in ("results.csv", "results.json", "summary.json", "timing.json", "report.md",
                 "boxplot_auc_roc.svg", "cd_diagram.svg"):
        assert (out / name).exists(), name
    rows = (out / "results.csv").read_text().splitlines()
    assert len(rows) == 1 + 2 * 2
    before = {p.name: p.read_bytes() for p in out.iterdir() if p.is_file()}
    n_cache = len(list((out / "cache").iterdir()))
    assert main(bench_args(str(tmp_path / "ds" / "*"), out)) == 0
    assert {p.name: p.read_bytes() for p in out.iterdir() if p.is_file()} == before
    assert len(list((out / "cache").iterdir())) == n_cache
    assert main(["report", str(out), "--out", str(tmp_path / "rep")]) == 0
    assert (tmp_path / "rep" / "summary.json").read_bytes() == before["summary.json"]


def test_bench_single_bundle_rows(tmp_path):
    main(["build-dataset", "--out", str(tmp_path / "one")])
    assert main(bench_args(str(tmp_path / "one"), tmp_path / "o", "--window", "16")) == 0
    assert len((tmp_path / "o" / "results.csv").read_text().splitlines()) == 1 + 2 * 2


def test_bench_no_bundles(tmp_path):
    assert main(bench_args(str(tmp_path / "none*"), tmp_path / "o")) == 2


def test_parser_flags():
    p = build_parser()
    ns = p.parse_args(["bench", "x", "--window", "8", "--window", "acf", "--jobs", "2", "--seed", "4"])
    assert ns.window == ["8", "acf"] and ns.jobs == 2 and ns.seed == 4
