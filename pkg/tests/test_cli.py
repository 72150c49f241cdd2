from __future__ import annotations

import json
import subprocess
import sys

import pytest
from click.testing import CliRunner

from synthengine.cli import main as engine_cli
from synthengine.records import read_manifest

from pipeline_helpers import run_cli, run_full_pipeline


def test_console_script_runs():
    out = subprocess.run(
        [sys.executable, "-m", "synthengine.cli", "--version"], capture_output=True, text=True
    )
    assert out.returncode == 0
    assert "engine" in out.stdout


def test_full_pipeline_produces_all_artifacts(tmp_path):
    paths = run_full_pipeline(tmp_path / "run")
    syn = read_manifest(paths["syn"])
    assert len(syn) == 18  # 6 scenes x 3 variations
    clean = read_manifest(paths["clean"])
    assert 0 < len(clean) <= len(syn)
    train = read_manifest(paths["train_e"])
    assert len(train) == len(read_manifest(paths["real"])) + len(clean)
    report = json.loads(paths["report"].read_text())
    assert report["achieved_recall"] >= 0.9
    assert (paths["yolo"] / "data.yaml").is_file()
    gap = json.loads(paths["gap"].read_text())
    assert gap["frechet_gap"] >= 0.0


def test_filter_requires_calibration_when_config_defers(tmp_path):
    paths = run_full_pipeline(tmp_path / "run")
    runner = CliRunner()
    result = runner.invoke(
        engine_cli,
        [
            "filter", "--manifest", str(paths["syn"]), "--embeddings", str(paths["syn_embs"]),
            "--detections", str(paths["syn_dets"]), "--prompt-bank", str(paths["bank"]),
            "--config", str(paths["cfg"]),
            "--out-clean", str(tmp_path / "c.jsonl"), "--out-decisions", str(tmp_path / "d.jsonl"),
        ],
    )
    assert result.exit_code != 0
    assert "calibrate" in result.output


def test_engine_errors_exit_cleanly(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("[pipeline]\nk_top = 0\n")
    runner = CliRunner()
    result = runner.invoke(engine_cli, ["gen-plan", "--config", str(bad), "--out", str(tmp_path / "p.jsonl")])
    assert result.exit_code != 0
    assert "Error" in result.output


def test_import_command_roundtrips(tmp_path):
    paths = run_full_pipeline(tmp_path / "run")
    out_m = tmp_path / "imported.jsonl"
    out_a = tmp_path / "imported_annotations.jsonl"
    run_cli(["import", "--path", str(paths["yolo"]), "--out-manifest", str(out_m),
             "--out-annotations", str(out_a)])
    assert read_manifest(out_m).ids() == read_manifest(paths["train_e"]).ids()


def test_review_export_from_log(tmp_path):
    from synthengine.cascade import read_decisions
    from synthengine.review.log import ReviewQueue

    paths = run_full_pipeline(tmp_path / "run")
    log = tmp_path / "review.log"
    queue = ReviewQueue(log)
    queue.enqueue(read_decisions(paths["decisions"]), policy="borderline_and_rejected")
    item = queue.next_item()
    if item is not None:
        queue.submit_verdict(item.id, "accept", "cli-test")
    out = tmp_path / "verdicts.jsonl"
    run_cli(["review", "export", "--log", str(log), "--out", str(out)])
    assert out.exists()
