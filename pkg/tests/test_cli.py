import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from cleanloop.cli import main
from cleanloop.synthetic import generate


@pytest.fixture(scope="module")
def pipeline_dirs(tmp_path_factory):
    """Full CLI pipeline over the synthetic dataset, run once for the module."""
    source = tmp_path_factory.mktemp("source")
    data_dir = tmp_path_factory.mktemp("data")
    generate(source, seed=7)
    runner = CliRunner()

    def run(*args):
        result = runner.invoke(main, list(args), catch_exceptions=False)
        assert result.exit_code == 0, result.output
        return result.output

    run(
        "ingest",
        "--data-dir", str(data_dir),
        "--name", "synth",
        "--manifest", str(source / "manifest.jsonl"),
        "--baseline-side", "16",
    )
    for noise_type in ("irrelevant", "near_duplicate", "label_error"):
        run("rank", "--data-dir", str(data_dir), "--name", "synth", "--noise-type", noise_type)
        for annotator in ("e1", "e2", "e3"):
            run(
                "simulate-annotator",
                "--data-dir", str(data_dir),
                "--dataset", "synth",
                "--noise-type", noise_type,
                "--annotator", annotator,
                "--truth", str(source / "truth.json"),
            )
    return source, data_dir, run


def test_ingest_summary(pipeline_dirs):
    source, data_dir, run = pipeline_dirs
    meta = json.loads((data_dir / "datasets" / "synth" / "meta.json").read_text())
    assert meta["n"] == 60
    assert meta["d"] == 256


def test_simulated_sessions_stop_by_criterion(pipeline_dirs):
    _, data_dir, _ = pipeline_dirs
    logs = list((data_dir / "sessions").glob("*.jsonl"))
    assert len(logs) == 9
    for log in logs:
        events = [json.loads(line) for line in log.read_text().splitlines()]
        assert events[0]["event"] == "start"
        assert events[-1]["event"] == "stop"
        assert events[-1]["status"] == "stopped_by_criterion"


def test_aggregate_finds_planted_issues(pipeline_dirs):
    source, data_dir, run = pipeline_dirs
    truth = json.loads((source / "truth.json").read_text())
    out = json.loads(run("aggregate", "--data-dir", str(data_dir), "--dataset", "synth", "--mode", "unanimous"))
    assert sorted(out["irrelevant"]) == sorted(truth["irrelevant"])
    assert sorted(map(sorted, out["near_duplicate"])) == sorted(map(sorted, truth["near_duplicate"]))
    assert sorted(out["label_error"]) == sorted(truth["label_error"])


def test_clean_writes_file_list(pipeline_dirs):
    _, data_dir, run = pipeline_dirs
    out = json.loads(run("clean", "--data-dir", str(data_dir), "--dataset", "synth", "--mode", "unanimous", "--seed", "11"))
    assert len(out["cleaned_ids"]) == 56  # 60 - 2 outliers - 1 per dup pair
    assert out["label_error_count"] == 2
    listing = (data_dir / "datasets" / "synth" / "cleaned_unanimous.txt").read_text().splitlines()
    assert len(listing) == 56


def test_stats_reports_perfect_agreement(pipeline_dirs):
    _, data_dir, run = pipeline_dirs
    out = json.loads(run("stats", "--data-dir", str(data_dir), "--dataset", "synth", "--noise-type", "irrelevant", "--reps", "40"))
    alpha = out["irrelevant"]["krippendorff_alpha"]
    assert alpha["point"] == 1.0
    assert alpha["band"] == "good"
    for pair in out["irrelevant"]["cohen_kappa_pairs"]:
        assert pair["point"] == 1.0


def test_sensitivity_command(pipeline_dirs):
    _, data_dir, run = pipeline_dirs
    session_id = next((data_dir / "sessions").glob("*.jsonl")).stem
    out = json.loads(run("sensitivity", "--data-dir", str(data_dir), "--session", session_id))
    default_point = out["points"][0]
    assert (default_point["p_chance"], default_point["p_plus"]) == (0.05, 0.05)
    assert default_point["n_clean"] == 58


def test_report_command(pipeline_dirs, tmp_path):
    _, data_dir, run = pipeline_dirs
    out_file = tmp_path / "report.json"
    run("report", "--data-dir", str(data_dir), "--dataset", "synth", "--reps", "30", "--out", str(out_file))
    report = json.loads(out_file.read_text())
    assert report["size"] == 60
    assert report["label_error_prevalence_unanimous"] == pytest.approx(3.3, abs=0.05)
    quality = report["ranking_quality"]["near_duplicate"]
    assert quality["auroc_pct"] == 100.0
    speed = report["speed_up"]["near_duplicate"]
    assert speed["micro_average"] > 20


def test_evaluate_command(pipeline_dirs, tmp_path):
    source, data_dir, run = pipeline_dirs
    manifest_lines = (source / "manifest.jsonl").read_text().splitlines()
    rows = ["id,score,label"]
    for k, line in enumerate(manifest_lines):
        rec = json.loads(line)
        label = 1 if rec["label"] == "disc" else 0
        rows.append(f"{rec['id']},{0.9 - 0.01 * k:.3f},{label}")
    scores = tmp_path / "scores.csv"
    scores.write_text("\n".join(rows) + "\n")
    out = json.loads(
        run(
            "evaluate",
            "--data-dir", str(data_dir),
            "--dataset", "synth",
            "--scores", str(scores),
            "--mode", "unanimous",
            "--reps", "50",
            "--seed", "2",
        )
    )
    assert set(out["deltas"]) == {"auroc", "average_precision", "auprg"}
    assert len(out["removed"]) == 4


def test_cli_error_rendering(tmp_path):
    runner = CliRunner()
    result = runner.invoke(
        main,
        ["rank", "--data-dir", str(tmp_path), "--name", "ghost", "--noise-type", "irrelevant"],
    )
    assert result.exit_code != 0
