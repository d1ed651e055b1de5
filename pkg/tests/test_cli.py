"""Subcommand behavior, exit codes, artifact determinism, composition."""

from __future__ import annotations

import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from cmxqe.cli import main
from cmxqe.fusion import load_feature_matrix
from cmxqe.nn import load_checkpoint

from conftest import FIXTURE_CSV, TINY_PAIRS, TINY_SYNTH, dataset_rows, write_rows_csv


def run_cli(capsys, *argv):
    """In-process invocation; returns (exit_code, parsed stdout JSON)."""
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, json.loads(out) if out.strip() else None


@pytest.fixture(scope="module")
def pipe(tmp_path_factory):
    """Embeddings + fused matrices + a trained checkpoint over the fixture."""
    base = tmp_path_factory.mktemp("pipe")
    emb = base / "emb"
    assert main(["embed", "--dataset", str(FIXTURE_CSV), "--out-dir", str(emb),
                 "--provider", "deterministic:42"]) == 0
    rating_all = base / "rating_all.clsv"
    assert main(["fuse", "--dataset", str(FIXTURE_CSV), "--embeddings-dir", str(emb),
                 "--task", "rating", "--out", str(rating_all)]) == 0
    ckpt = base / "rating.mlpc"
    assert main(["train", "--matrix", str(rating_all), "--out", str(ckpt),
                 "--seed", "7"]) == 0
    return {"base": base, "emb": emb, "rating_all": rating_all, "ckpt": ckpt}


# ---------------------------------------------------------------------------
# validate


def test_validate_clean_exit_zero(capsys, fixture_csv):
    code, report = run_cli(capsys, "validate", "--dataset", str(fixture_csv))
    assert code == 0
    assert report["ok"] is True
    assert report["pair_count"] == 12
    assert report["synthetic_count"] == 24


def test_validate_violations_exit_one(capsys, tmp_path):
    pairs = [("p1", "only one ref", "एक ही", ["ek hi hai"])]
    synth = [("s1", "p1", "WAC", "ek hi to hai", 5, 6)]
    path = write_rows_csv(tmp_path / "bad.csv", dataset_rows(pairs, synth))
    code, report = run_cli(capsys, "validate", "--dataset", str(path))
    assert code == 1
    assert [v["kind"] for v in report["violations"]] == ["too_few_references"]


def test_validate_malformed_rows_count_as_violations(capsys, tmp_path):
    rows = dataset_rows(TINY_PAIRS, TINY_SYNTH)
    rows.append(["t1", "", "", "", "zz", "WAC", "text", 42, 5, "", ""])
    path = write_rows_csv(tmp_path / "messy.csv", rows)
    code, report = run_cli(capsys, "validate", "--dataset", str(path))
    assert code == 1
    kinds = [v["kind"] for v in report["violations"]]
    assert kinds == ["malformed_row"]


def test_validate_missing_file_exit_two(capsys, tmp_path):
    code, payload = run_cli(capsys, "validate", "--dataset", str(tmp_path / "x.csv"))
    assert code == 2
    assert "error" in payload


# ---------------------------------------------------------------------------
# embed


def test_embed_writes_four_deterministic_files(capsys, tiny_csv, tmp_path):
    out_a = tmp_path / "a"
    code, payload = run_cli(capsys, "embed", "--dataset", str(tiny_csv),
                            "--out-dir", str(out_a), "--provider", "deterministic:7")
    assert code == 0
    assert payload["files"] == {
        "syn_en.clsv": 4, "syn_hi.clsv": 4, "hum_en.clsv": 6, "hum_hi.clsv": 6,
    }
    out_b = tmp_path / "b"
    assert main(["embed", "--dataset", str(tiny_csv), "--out-dir", str(out_b),
                 "--provider", "deterministic:7"]) == 0
    for name in payload["files"]:
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


def test_embed_bad_provider_spec(capsys, tiny_csv, tmp_path):
    for spec in ("deterministic", "deterministic:x", "files", "magic:3"):
        code, payload = run_cli(capsys, "embed", "--dataset", str(tiny_csv),
                                "--out-dir", str(tmp_path / "o"), "--provider", spec)
        assert code == 2, spec
        assert "error" in payload


def test_embed_file_provider_requires_all_keys(capsys, tiny_csv, tmp_path, pipe):
    # fixture embeddings lack the tiny dataset's keys
    code, payload = run_cli(capsys, "embed", "--dataset", str(tiny_csv),
                            "--out-dir", str(tmp_path / "o"),
                            "--provider", f"files:{pipe['emb']}")
    assert code == 2
    assert "error" in payload


def test_embed_file_provider_round_trips(capsys, tmp_path, pipe):
    # re-export the fixture's own embeddings through the files provider
    out = tmp_path / "copy"
    code, payload = run_cli(capsys, "embed", "--dataset", str(FIXTURE_CSV),
                            "--out-dir", str(out),
                            "--provider", f"files:{pipe['emb']}")
    assert code == 0
    for name in payload["files"]:
        assert (out / name).read_bytes() == (pipe["emb"] / name).read_bytes()


# ---------------------------------------------------------------------------
# fuse


def test_fuse_full_matrix(capsys, pipe):
    code, payload = run_cli(capsys, "fuse", "--dataset", str(FIXTURE_CSV),
                            "--embeddings-dir", str(pipe["emb"]),
                            "--task", "disagreement",
                            "--out", str(pipe["base"] / "dis_all.clsv"))
    assert code == 0
    assert payload["rows"] == 24
    assert payload["dim"] == 3072
    matrix = load_feature_matrix(pipe["base"] / "dis_all.clsv")
    assert len(matrix) == 24


def test_fuse_split_partitions_rows(capsys, pipe, tmp_path):
    rows = {}
    for split in ("train", "test"):
        out = tmp_path / f"{split}.clsv"
        code, payload = run_cli(capsys, "fuse", "--dataset", str(FIXTURE_CSV),
                                "--embeddings-dir", str(pipe["emb"]),
                                "--task", "rating", "--out", str(out),
                                "--split", split, "--seed", "42")
        assert code == 0
        rows[split] = set(load_feature_matrix(out).record_ids)
    assert len(rows["train"] & rows["test"]) == 0
    assert len(rows["train"] | rows["test"]) == 24


def test_fuse_empty_dataset_exit_two(capsys, tmp_path, pipe):
    pairs_only = [("p1", "en text", "हिंदी", ["ref ek", "ref do"])]
    path = write_rows_csv(tmp_path / "empty.csv", dataset_rows(pairs_only, []))
    code, payload = run_cli(capsys, "fuse", "--dataset", str(path),
                            "--embeddings-dir", str(pipe["emb"]),
                            "--task", "rating", "--out", str(tmp_path / "o.clsv"))
    assert code == 2
    assert "error" in payload


# ---------------------------------------------------------------------------
# train


def test_train_writes_checkpoint_and_trace(capsys, pipe, tmp_path):
    out = tmp_path / "m.mlpc"
    code, payload = run_cli(capsys, "train", "--matrix", str(pipe["rating_all"]),
                            "--out", str(out), "--seed", "7")
    assert code == 0
    assert payload["task"] == "rating"
    assert payload["epochs"] == 3  # rating default
    ckpt = load_checkpoint(out)
    assert len(ckpt.trace) == 3
    with open(payload["trace_csv"], newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["epoch", "mean_loss"]
    assert len(rows) == 4
    assert [r[0] for r in rows[1:]] == ["1", "2", "3"]
    assert float(rows[1][1]) == ckpt.trace[0]  # repr round-trip

    # same seed/matrix -> identical bytes (fixture trained with seed 7 too)
    assert out.read_bytes() == pipe["ckpt"].read_bytes()


def test_train_task_mismatch_exit_two(capsys, pipe, tmp_path):
    code, payload = run_cli(capsys, "train", "--matrix", str(pipe["rating_all"]),
                            "--task", "disagreement",
                            "--out", str(tmp_path / "m.mlpc"))
    assert code == 2
    assert "error" in payload


def test_train_epochs_flag(capsys, pipe, tmp_path):
    out = tmp_path / "m.mlpc"
    code, payload = run_cli(capsys, "train", "--matrix", str(pipe["rating_all"]),
                            "--out", str(out), "--epochs", "1")
    assert code == 0
    assert payload["epochs"] == 1


# ---------------------------------------------------------------------------
# predict / evaluate


def test_predict_covers_all_rows(capsys, pipe, tmp_path):
    out = tmp_path / "preds.json"
    code, payload = run_cli(capsys, "predict", "--checkpoint", str(pipe["ckpt"]),
                            "--matrix", str(pipe["rating_all"]), "--out", str(out))
    assert code == 0
    assert payload["n"] == 24
    assert sorted(payload["predictions"]) == sorted(
        load_feature_matrix(pipe["rating_all"]).record_ids
    )
    assert all(1 <= v <= 10 for v in payload["predictions"].values())
    assert json.loads(out.read_text())["predictions"] == payload["predictions"]


def test_evaluate_against_sidecar_labels(capsys, pipe, tmp_path):
    report_path = tmp_path / "report.json"
    code, report = run_cli(capsys, "evaluate", "--checkpoint", str(pipe["ckpt"]),
                           "--matrix", str(pipe["rating_all"]),
                           "--out", str(report_path))
    assert code == 0
    assert report["task"] == "rating"
    assert report["n"] == 24
    assert 0.0 <= report["f1_weighted"] <= 1.0
    assert json.loads(report_path.read_text()) == report


def test_evaluate_gold_equals_predictions(capsys, pipe, tmp_path):
    code, payload = run_cli(capsys, "predict", "--checkpoint", str(pipe["ckpt"]),
                            "--matrix", str(pipe["rating_all"]))
    assert code == 0
    gold_path = tmp_path / "gold.json"
    gold_path.write_text(json.dumps(payload["predictions"]))
    code, report = run_cli(capsys, "evaluate", "--checkpoint", str(pipe["ckpt"]),
                           "--matrix", str(pipe["rating_all"]),
                           "--gold", str(gold_path))
    assert code == 0
    assert report["f1_micro"] == 1.0
    assert report["mse"] == 0.0


def test_evaluate_gold_length_mismatch_exit_two(capsys, pipe, tmp_path):
    gold_path = tmp_path / "gold.json"
    gold_path.write_text("[5, 5, 5]")  # matrix has 24 rows
    code, payload = run_cli(capsys, "evaluate", "--checkpoint", str(pipe["ckpt"]),
                            "--matrix", str(pipe["rating_all"]),
                            "--gold", str(gold_path))
    assert code == 2
    assert "error" in payload


def test_evaluate_checkpoint_task_mismatch(capsys, pipe, tmp_path):
    dis = tmp_path / "dis.clsv"
    assert main(["fuse", "--dataset", str(FIXTURE_CSV), "--embeddings-dir",
                 str(pipe["emb"]), "--task", "disagreement", "--out", str(dis)]) == 0
    capsys.readouterr()  # drop the fuse stage's stdout
    code, payload = run_cli(capsys, "evaluate", "--checkpoint", str(pipe["ckpt"]),
                            "--matrix", str(dis))
    assert code == 2
    assert "error" in payload


# ---------------------------------------------------------------------------
# run-all


def test_run_all_composes_from_subcommands(capsys, tmp_path):
    # one-shot pipeline
    auto = tmp_path / "auto"
    code, summary = run_cli(
        capsys, "run-all", "--dataset", str(FIXTURE_CSV), "--out-dir", str(auto),
        "--provider", "deterministic:42", "--seed", "42",
    )
    assert code == 0
    assert set(summary["tasks"]) == {"rating", "disagreement"}

    # same stages by hand
    manual = tmp_path / "manual"
    emb = manual / "embeddings"
    assert main(["embed", "--dataset", str(FIXTURE_CSV), "--out-dir", str(emb),
                 "--provider", "deterministic:42"]) == 0
    for task in ("rating", "disagreement"):
        tdir = manual / task
        tdir.mkdir(parents=True)
        for split in ("train", "test"):
            assert main(["fuse", "--dataset", str(FIXTURE_CSV),
                         "--embeddings-dir", str(emb), "--task", task,
                         "--out", str(tdir / f"{split}.clsv"),
                         "--split", split, "--seed", "42"]) == 0
        assert main(["train", "--matrix", str(tdir / "train.clsv"),
                     "--out", str(tdir / "model.mlpc"), "--seed", "42"]) == 0
        assert main(["evaluate", "--checkpoint", str(tdir / "model.mlpc"),
                     "--matrix", str(tdir / "test.clsv"),
                     "--out", str(tdir / "report.json")]) == 0
    capsys.readouterr()  # drop the manual stages' stdout

    for task in ("rating", "disagreement"):
        want = (manual / task / "model.mlpc").read_bytes()
        got = (auto / task / "model.mlpc").read_bytes()
        assert want == got, f"{task} checkpoints diverge"
        manual_report = json.loads((manual / task / "report.json").read_text())
        assert summary["tasks"][task]["report"] == manual_report


def test_run_all_reads_config_file(capsys, tmp_path):
    out = tmp_path / "out"
    config = {
        "dataset": str(FIXTURE_CSV),
        "out_dir": str(out),
        "provider": "deterministic:5",
        "epochs_rating": 1,
        "epochs_disagreement": 1,
    }
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(config))
    code, summary = run_cli(capsys, "run-all", "--config", str(cfg))
    assert code == 0
    assert summary["config"]["provider"] == "deterministic:5"
    assert (out / "summary.json").exists()
    assert json.loads((out / "summary.json").read_text()) == summary


def test_run_all_flags_beat_config(capsys, tmp_path):
    out = tmp_path / "out"
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"dataset": "/nonexistent.csv", "out_dir": str(out),
                               "epochs_rating": 1, "epochs_disagreement": 1}))
    code, summary = run_cli(capsys, "run-all", "--config", str(cfg),
                            "--dataset", str(FIXTURE_CSV))
    assert code == 0
    assert summary["config"]["dataset"] == str(FIXTURE_CSV)


def test_run_all_unknown_config_key(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"dataset": "x", "out_dir": "y", "momentum": 0.9}))
    code, payload = run_cli(capsys, "run-all", "--config", str(cfg))
    assert code == 2
    assert "momentum" in payload["error"]["message"]


def test_run_all_aborts_on_validation_violations(capsys, tmp_path):
    pairs = [("p1", "", "हिंदी", ["ek", "do"])]  # empty english
    synth = [("s1", "p1", "WAC", "text", 5, 5)]
    path = write_rows_csv(tmp_path / "bad.csv", dataset_rows(pairs, synth))
    out = tmp_path / "out"
    code, report = run_cli(capsys, "run-all", "--dataset", str(path),
                           "--out-dir", str(out))
    assert code == 1
    assert any(v["kind"] == "empty_english" for v in report["violations"])
    assert (out / "validation.json").exists()
    assert not (out / "summary.json").exists()  # aborted before later stages


def test_run_all_requires_dataset_and_out_dir(capsys):
    code, payload = run_cli(capsys, "run-all")
    assert code == 2
    assert "error" in payload


# ---------------------------------------------------------------------------
# process-level wiring


def test_module_entrypoint_subprocess(fixture_csv):
    proc = subprocess.run(
        [sys.executable, "-m", "cmxqe", "validate", "--dataset", str(fixture_csv)],
        capture_output=True, text=True, timeout=120,
    )
    assert proc.returncode == 0
    report = json.loads(proc.stdout)  # stdout is pure JSON
    assert report["ok"] is True


def test_logs_go_to_stderr_not_stdout(fixture_csv):
    proc = subprocess.run(
        [sys.executable, "-m", "cmxqe", "validate", "--dataset", str(fixture_csv)],
        capture_output=True, text=True, timeout=120,
        env={"PATH": "/usr/bin:/bin", "CMXQE_LOG": "DEBUG"},
    )
    assert proc.returncode == 0
    json.loads(proc.stdout)  # still parseable with DEBUG logging on
    assert "DEBUG" in proc.stderr or proc.stderr == "" or "INFO" in proc.stderr


def test_unknown_subcommand_is_usage_error():
    with pytest.raises(SystemExit):
        main(["frobnicate"])
