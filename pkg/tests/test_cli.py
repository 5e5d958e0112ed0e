"""Command-line entry points: simulate, replay, validate, report."""

from __future__ import annotations

import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from cogload.cli import SCORE_COLUMNS, main
from cogload.records import SkeletonSample, read_session, write_session


@pytest.fixture(scope="module")
def simulated_files(tmp_path_factory):
    d = tmp_path_factory.mktemp("sim")
    session = d / "hrc_seed42.jsonl"
    assert main(["simulate", "--scenario", "hrc", "--seed", "42", "--out", str(session)]) == 0
    return d, session


@pytest.fixture(scope="module")
def replayed(simulated_files, tmp_path_factory):
    d, session = simulated_files
    out = tmp_path_factory.mktemp("replay")
    config = d / "hrc_seed42.config.json"
    assert main(["replay", "--config", str(config), "--session", str(session), "--out", str(out), "--debug"]) == 0
    return out


def test_simulate_writes_session_and_sidecars(simulated_files):
    d, session = simulated_files
    for suffix in (".jsonl", ".truth.json", ".config.json", ".rr.txt", ".eda.txt"):
        assert (d / f"hrc_seed42{suffix}").stat().st_size > 0
    truth = json.loads((d / "hrc_seed42.truth.json").read_text())
    assert len(truth["events"]["request"]) == 5
    assert read_session(session).ok


@pytest.mark.parametrize(
    "argv",
    [
        ["simulate", "--scenario", "bogus"],
        ["simulate", "--duration", "0"],
        ["simulate", "--seed", "x"],
        ["replay", "--session", "s.jsonl"],
        ["validate", "--scores", "a", "--rr", "b", "--eda", "c", "--block-length", "-5"],
        ["frobnicate"],
    ],
)
def test_usage_errors_exit_2(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2
    assert "usage" in capsys.readouterr().err


def test_replay_outputs(replayed):
    with open(replayed / "scores.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == SCORE_COLUMNS
    assert len(rows) == 1 + 9000
    assert rows[1][0] == repr(1 / 15)
    for name in ("feedback.csv", "chart.svg", "summary.json", "attention.csv", "kinematics.csv"):
        assert (replayed / name).exists()
    summary = json.loads((replayed / "summary.json").read_text())
    assert summary["feedback_cycles"] == 5
    assert len(summary["blocks"]) == 4
    assert summary["loops"] == 9000
    svg = (replayed / "chart.svg").read_text()
    assert svg.startswith("<svg") and "mental_effort" in svg and "stress_level" in svg
    with open(replayed / "attention.csv", newline="") as fh:
        head = next(csv.reader(fh))
    assert head == ["t", "A_W1", "A_W2", "A_W3", "focus", "transition_kind"]


def test_replay_is_byte_identical(simulated_files, replayed, tmp_path):
    d, session = simulated_files
    config = d / "hrc_seed42.config.json"
    again = tmp_path / "again"
    assert main(["replay", "--config", str(config), "--session", str(session), "--out", str(again), "--debug"]) == 0
    for name in ("scores.csv", "feedback.csv", "chart.svg", "summary.json", "attention.csv", "kinematics.csv"):
        assert (again / name).read_bytes() == (replayed / name).read_bytes(), name


def test_replay_without_skeleton(simulated_files, tmp_path, capsys):
    d, session = simulated_files
    records = [r for r in read_session(session).records if not isinstance(r, SkeletonSample) and r.t <= 60]
    bare = tmp_path / "bare.jsonl"
    write_session(bare, records)
    out = tmp_path / "out"
    code = main(["replay", "--config", str(d / "hrc_seed42.config.json"), "--session", str(bare), "--out", str(out)])
    assert code == 0
    with open(out / "scores.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert rows and all(r["hyperactivity"] == "" for r in rows)
    summary = json.loads((out / "summary.json").read_text())
    assert any("no skeleton records" in w for w in summary["warnings"])
    assert "warning" in capsys.readouterr().err


def test_replay_parse_failure_removes_outputs(simulated_files, tmp_path):
    d, session = simulated_files
    lines = session.read_text().splitlines()[:3000]
    lines.insert(2000, '{"t": 50.0, "type": "skeleton", "joints": {}}')
    broken = tmp_path / "broken.jsonl"
    broken.write_text("\n".join(lines) + "\n")
    out = tmp_path / "out"
    code = main(["replay", "--config", str(d / "hrc_seed42.config.json"), "--session", str(broken), "--out", str(out)])
    assert code == 1
    assert not out.exists() or not any(out.iterdir())


def test_replay_missing_inputs(simulated_files, tmp_path):
    d, session = simulated_files
    assert main(["replay", "--config", str(tmp_path / "none.json"), "--session", str(session), "--out", str(tmp_path)]) == 1
    assert main(["replay", "--config", str(d / "hrc_seed42.config.json"), "--session", str(tmp_path / "x")]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text('{"workstations": []}')
    assert main(["replay", "--config", str(bad), "--session", str(session)]) == 1


def test_replay_sorts_unordered_file(simulated_files, tmp_path, capsys):
    d, session = simulated_files
    lines = session.read_text().splitlines()[:600]
    shuffled = tmp_path / "shuffled.jsonl"
    shuffled.write_text("\n".join(reversed(lines)) + "\n")
    ordered = tmp_path / "ordered.jsonl"
    ordered.write_text("\n".join(sorted(lines, key=lambda s: json.loads(s)["t"])) + "\n")
    cfg = str(d / "hrc_seed42.config.json")
    assert main(["replay", "--config", cfg, "--session", str(shuffled), "--out", str(tmp_path / "a")]) == 0
    assert main(["replay", "--config", cfg, "--session", str(ordered), "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a" / "scores.csv").read_bytes() == (tmp_path / "b" / "scores.csv").read_bytes()
    assert "not time-ordered" in capsys.readouterr().err


def test_validate_reports_positive_correlations(simulated_files, replayed, tmp_path):
    d, _ = simulated_files
    report = tmp_path / "report.json"
    code = main(
        [
            "validate",
            "--scores", str(replayed / "scores.csv"),
            "--rr", str(d / "hrc_seed42.rr.txt"),
            "--eda", str(d / "hrc_seed42.eda.txt"),
            "--out", str(report),
        ]
    )
    assert code == 0
    doc = json.loads(report.read_text())
    assert len(doc["blocks"]) == 4
    pairs = {(c["x"], c["y"]): c["r_s"] for c in doc["correlations"]}
    assert set(pairs) == {
        ("mental_effort", "lf_hf"),
        ("stress_level", "scl_mean"),
        ("stress_level", "scr_mean_amplitude"),
    }
    assert all(r is not None and r > 0 for r in pairs.values())


def test_validate_constant_scores_zero_variance(simulated_files, replayed, tmp_path, capsys):
    d, _ = simulated_files
    with open(replayed / "scores.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    flat = tmp_path / "flat.csv"
    with open(flat, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        for r in rows:
            w.writerow({**r, "mental_effort": "0.25"})
    code = main(["validate", "--scores", str(flat), "--rr", str(d / "hrc_seed42.rr.txt"), "--eda", str(d / "hrc_seed42.eda.txt")])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    by_pair = {(c["x"], c["y"]): c for c in doc["correlations"]}
    me = by_pair[("mental_effort", "lf_hf")]
    assert me["r_s"] is None and "ZeroVariance" in me["error"]
    assert by_pair[("stress_level", "scl_mean")]["r_s"] is not None


def test_validate_short_rr_exits_1(simulated_files, replayed, tmp_path, capsys):
    d, _ = simulated_files
    rr = tmp_path / "short.rr.txt"
    rr.write_text("\n".join(["0.8"] * 37) + "\n")  # about 30 s
    code = main(["validate", "--scores", str(replayed / "scores.csv"), "--rr", str(rr), "--eda", str(d / "hrc_seed42.eda.txt")])
    assert code == 1
    assert "SeriesTooShort" in capsys.readouterr().err


def test_validate_needs_two_blocks(tmp_path, capsys):
    scores = tmp_path / "s.csv"
    t = np.arange(1, 200 * 15 + 1) / 15
    with open(scores, "w") as fh:
        fh.write("t,mental_effort,stress_level\n")
        fh.writelines(f"{float(x)!r},{float(np.sin(x))!r},0.1\n" for x in t)
    rr = tmp_path / "rr.txt"
    rr.write_text("\n".join(["0.8"] * 400) + "\n")
    eda = tmp_path / "eda.txt"
    eda.write_text("# rate: 16\n" + "".join(f"{k / 16!r} 2.0\n" for k in range(16 * 320)))
    code = main(["validate", "--scores", str(scores), "--rr", str(rr), "--eda", str(eda)])
    assert code == 1
    assert "overlap" in capsys.readouterr().err


def test_report_command(replayed, tmp_path, capsys):
    assert main(["report", "--out", str(replayed)]) == 0
    text = capsys.readouterr().out
    assert "handovers 5" in text and "mental_effort" in text
    assert main(["report", "--out", str(tmp_path / "nothing")]) == 1


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "cogload", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("cogload")
