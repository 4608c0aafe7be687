"""Command line interface: gen, run (all strategies), grids, diff-vocab."""

import json

import pytest

from driftstream import (FeatureExtractorModel, RawSample, fit_extractor,
                         load_stream)
from driftstream.cli import main


@pytest.fixture()
def stream_file(tmp_path):
    path = tmp_path / "stream.jsonl"
    code = main(["gen", "--n", "600", "--seed", "3", "--out", str(path)])
    assert code == 0
    return path


def run_cli(args):
    return main(list(args))


# ---------------------------------------------------------------------------
# gen
# ---------------------------------------------------------------------------

def test_gen_writes_requested_line_count(tmp_path, capsys):
    out = tmp_path / "s.jsonl"
    assert main(["gen", "--n", "150", "--out", str(out)]) == 0
    assert "wrote 150 samples" in capsys.readouterr().out
    assert len(out.read_text().splitlines()) == 150
    stream = load_stream(out)
    assert len(stream) == 150
    assert {s.label for s in stream} == {0, 1}


def test_gen_is_deterministic_per_seed(tmp_path):
    a = tmp_path / "a.jsonl"
    b = tmp_path / "b.jsonl"
    main(["gen", "--n", "100", "--seed", "9", "--out", str(a)])
    main(["gen", "--n", "100", "--seed", "9", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_gen_rejects_bad_spec(tmp_path, capsys):
    out = tmp_path / "s.jsonl"
    code = main(["gen", "--n", "100", "--drift-at", "500", "--out", str(out)])
    assert code == 1
    assert "error" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------

def test_run_streaming_strategy_exports_reports(tmp_path, stream_file, capsys):
    out = tmp_path / "reports"
    code = run_cli(["run", "--input", str(stream_file), "--out", str(out),
                    "--strategy", "fnf-update", "--detector", "adwin",
                    "--classifier", "sgd", "--warmup", "100",
                    "--metrics-window", "100"])
    assert code == 0
    for name in ("summary.json", "metrics.csv", "events.jsonl",
                 "vocab_diffs.json", "extractor_final.json"):
        assert (out / name).exists()
    summary = json.loads((out / "summary.json").read_text())
    assert set(summary) == {"accuracy", "f1", "recall", "precision", "drifts"}
    printed = capsys.readouterr().out
    assert "accuracy" in printed and "drifts" in printed
    FeatureExtractorModel.load(out / "extractor_final.json")  # valid model


def test_run_is_byte_identical_across_reruns(tmp_path, stream_file):
    args = ["run", "--input", str(stream_file), "--strategy", "fnf-retrain",
            "--detector", "adwin", "--classifier", "sgd",
            "--warmup", "100", "--metrics-window", "100"]
    a = tmp_path / "a"
    b = tmp_path / "b"
    assert run_cli(args + ["--out", str(a)]) == 0
    assert run_cli(args + ["--out", str(b)]) == 0
    for name in ("summary.json", "metrics.csv", "events.jsonl",
                 "vocab_diffs.json", "extractor_final.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_run_temporal_summary_has_zero_drifts(tmp_path, stream_file):
    out = tmp_path / "t"
    code = run_cli(["run", "--input", str(stream_file), "--out", str(out),
                    "--strategy", "temporal", "--classifier", "sgd"])
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["drifts"] == 0


def test_run_cross_val_writes_folds(tmp_path, stream_file):
    out = tmp_path / "cv"
    code = run_cli(["run", "--input", str(stream_file), "--out", str(out),
                    "--strategy", "cross-val", "--classifier", "sgd",
                    "--cv-folds", "4"])
    assert code == 0
    folds = json.loads((out / "folds.json").read_text())
    assert len(folds) == 4
    assert sum(f["tp"] + f["fp"] + f["tn"] + f["fn"] for f in folds) == 600


def test_run_iwc_writes_periods(tmp_path):
    path = tmp_path / "months.jsonl"
    main(["gen", "--n", "90", "--step-seconds", "86400", "--out", str(path)])
    out = tmp_path / "iwc"
    code = run_cli(["run", "--input", str(path), "--out", str(out),
                    "--strategy", "iwc", "--classifier", "sgd"])
    assert code == 0
    periods = json.loads((out / "periods.json").read_text())
    assert [p["period"] for p in periods] == ["2009-02", "2009-03"]


def test_run_mts_writes_report(tmp_path, stream_file):
    out = tmp_path / "mts"
    code = run_cli(["run", "--input", str(stream_file), "--out", str(out),
                    "--strategy", "mts", "--mts-folds", "4",
                    "--mts-inner", "fnf-update", "--classifier", "sgd",
                    "--metrics-window", "100"])
    assert code == 0
    report = json.loads((out / "mts.json").read_text())
    assert len(report["folds"]) == 3
    assert "f1_mean" in report and "f1_std" in report
    assert (out / "summary.json").exists()


def test_run_pool_strategy(tmp_path, stream_file):
    out = tmp_path / "pool"
    code = run_cli(["run", "--input", str(stream_file), "--out", str(out),
                    "--strategy", "pool", "--warmup", "100",
                    "--pool-interval", "50", "--metrics-window", "100"])
    assert code == 0
    assert (out / "summary.json").exists()
    assert (out / "events.jsonl").exists()


# ---------------------------------------------------------------------------
# config file and precedence
# ---------------------------------------------------------------------------

def test_config_file_drives_run(tmp_path, stream_file):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "strategy": "temporal", "classifier": "sgd",
        "input": str(stream_file), "out": str(tmp_path / "from_cfg")}))
    assert run_cli(["run", "--config", str(cfg)]) == 0
    assert (tmp_path / "from_cfg" / "summary.json").exists()


def test_flags_override_config_file(tmp_path, stream_file):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"strategy": "temporal", "classifier": "sgd",
                               "input": str(stream_file)}))
    out = tmp_path / "cv_override"
    code = run_cli(["run", "--config", str(cfg), "--strategy", "cross-val",
                    "--cv-folds", "3", "--out", str(out)])
    assert code == 0
    assert (out / "folds.json").exists()  # cross-val ran, not temporal


def test_unknown_config_key_exits_2(tmp_path, stream_file, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"strategy": "temporal",
                               "detectorr": "adwin",
                               "input": str(stream_file)}))
    assert run_cli(["run", "--config", str(cfg)]) == 2
    assert "unknown config keys" in capsys.readouterr().err


def test_bad_strategy_value_exits_2(tmp_path, stream_file, capsys):
    code = run_cli(["run", "--input", str(stream_file),
                    "--out", str(tmp_path / "x"), "--strategy", "bogus"])
    assert code == 2
    assert "config error" in capsys.readouterr().err


def test_missing_input_exits_2(tmp_path, capsys):
    assert run_cli(["run", "--strategy", "temporal",
                    "--out", str(tmp_path / "x")]) == 2
    assert "--input" in capsys.readouterr().err


def test_nonexistent_input_exits_1(tmp_path, capsys):
    code = run_cli(["run", "--input", str(tmp_path / "missing.jsonl"),
                    "--strategy", "temporal", "--out", str(tmp_path / "x")])
    assert code == 1


def test_env_var_overrides_out_dir(tmp_path, stream_file, monkeypatch):
    env_dir = tmp_path / "env_out"
    monkeypatch.setenv("DRIFTSTREAM_OUT", str(env_dir))
    code = run_cli(["run", "--input", str(stream_file),
                    "--out", str(tmp_path / "ignored"),
                    "--strategy", "temporal", "--classifier", "sgd"])
    assert code == 0
    assert (env_dir / "summary.json").exists()
    assert not (tmp_path / "ignored").exists()


# ---------------------------------------------------------------------------
# grid
# ---------------------------------------------------------------------------

def test_grid_runs_each_entry(tmp_path, stream_file, capsys):
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps([
        {"name": "upd", "strategy": "fnf-update", "detector": "adwin"},
        {"name": "ret", "strategy": "fnf-retrain", "detector": "adwin"},
    ]))
    out = tmp_path / "gridout"
    code = run_cli(["run", "--input", str(stream_file), "--grid", str(grid),
                    "--out", str(out), "--classifier", "sgd",
                    "--warmup", "100", "--metrics-window", "100",
                    "--workers", "1"])
    assert code == 0
    for name in ("upd", "ret"):
        assert (out / name / "summary.json").exists()
    printed = capsys.readouterr().out
    assert "upd" in printed and "ret" in printed


def test_grid_rejects_unknown_entry_keys(tmp_path, stream_file, capsys):
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps([{"name": "a", "strategyy": "temporal"}]))
    code = run_cli(["run", "--input", str(stream_file), "--grid", str(grid),
                    "--out", str(tmp_path / "g")])
    assert code == 2
    assert "unknown keys" in capsys.readouterr().err


def test_grid_requires_array(tmp_path, stream_file):
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps({"strategy": "temporal"}))
    assert run_cli(["run", "--input", str(stream_file),
                    "--grid", str(grid)]) == 2


# ---------------------------------------------------------------------------
# diff-vocab
# ---------------------------------------------------------------------------

def test_diff_vocab_prints_and_writes(tmp_path, capsys):
    def doc(sid, tokens):
        return RawSample(id=sid, timestamp=1, label=0,
                         attributes={"api_calls": list(tokens)})

    old = fit_extractor([doc("a", ["x", "y"]), doc("b", ["y"])], k=2)
    new = fit_extractor([doc("a", ["z", "y"]), doc("b", ["z"])], k=2)
    old_path = tmp_path / "old.json"
    new_path = tmp_path / "new.json"
    old.save(old_path)
    new.save(new_path)

    out = tmp_path / "diffout"
    code = run_cli(["diff-vocab", str(old_path), str(new_path),
                    "--out", str(out)])
    assert code == 0
    printed = capsys.readouterr().out
    assert "api_calls: +1 -1 =1" in printed
    assert "+ z" in printed and "- x" in printed
    payload = json.loads((out / "vocab_diffs.json").read_text())
    assert payload[0]["diffs"][0]["added"] == ["z"]
