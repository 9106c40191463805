"""Tests for the command line."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from tvrank.cli import build_parser, main, overrides
from tvrank.config import CONFIG_RESOLVED_FILE
from tvrank.const import OUTPUT_DIR_ENV
from tvrank.evaluation import Report, ReportRow
from tvrank.features import DATASET_FILE, SCHEMA_FILE
from tvrank.wrmf import MfModel

from .common import SMALL_MODELS

# fmt: off
SYNTH_ARGS = [
    "--users", "10",
    "--weeks", "2",
    "--channels", "4",
    "--programs-per-week", "24",
    "--seed", "11",
]
# fmt: on


@pytest.fixture(autouse=True)
def no_output_env(monkeypatch: pytest.MonkeyPatch) -> None:
    """Keep the caller's output directory out of the runs."""
    monkeypatch.delenv(OUTPUT_DIR_ENV, raising=False)


def test_synth_then_ingest(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    """A generated dataset ingests cleanly and is summarized."""
    out = tmp_path / "run"
    assert main(["synth", "--output-dir", str(out), *SYNTH_ARGS]) == 0
    for name in ("epg.csv", "views.jsonl", "manifest.json", CONFIG_RESOLVED_FILE, "run.log"):
        assert (out / name).is_file()
    resolved = json.loads((out / CONFIG_RESOLVED_FILE).read_text(encoding="utf-8"))
    assert resolved["seed"] == 11
    assert resolved["synth"]["n_users"] == 10

    capsys.readouterr()
    assert main(["ingest", "--output-dir", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
    assert summary["users"] <= 10
    assert summary["dropped"] == 0
    assert "quadruples:" in capsys.readouterr().out
    assert "Root seed" in (out / "run.log").read_text(encoding="utf-8")


def test_missing_inputs_leave_nothing_behind(tmp_path: Path) -> None:
    """A failing command exits with 2 and removes the outputs it created."""
    out = tmp_path / "empty"
    assert main(["ingest", "--output-dir", str(out)]) == 2
    assert not out.exists()


def test_failure_keeps_existing_files(tmp_path: Path) -> None:
    """Cleanup only touches files the failed command created."""
    (tmp_path / "notes.txt").write_text("keep", encoding="utf-8")
    assert main(["ingest", "--output-dir", str(tmp_path)]) == 2
    assert sorted(path.name for path in tmp_path.iterdir()) == ["notes.txt"]


def test_invalid_configuration_exits_2(tmp_path: Path) -> None:
    """Configuration errors are reported, not raised."""
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"bogus": True}), encoding="utf-8")
    out = tmp_path / "out"
    assert main(["ingest", "--config", str(config), "--output-dir", str(out)]) == 2
    assert not out.exists()


def test_train_saves_models(tmp_path: Path, synth_files: tuple[Path, Path, Path]) -> None:
    """Training one fold writes the factor models, the ranker and the feature dataset."""
    epg, views, _ = synth_files
    config = tmp_path / "config.json"
    config.write_text(json.dumps(SMALL_MODELS), encoding="utf-8")
    out = tmp_path / "train"
    args = ["--epg", str(epg), "--views", str(views), "--config", str(config)]
    assert main(["train", "--output-dir", str(out), "--fold", "1", *args]) == 0
    models = out / "models"
    for name in ("wrmf.json", "funk_svd.json", "lambdamart.json", DATASET_FILE, SCHEMA_FILE):
        assert (models / name).is_file()
    assert MfModel.load(models / "wrmf.json").params.factors == 8

    assert main(["train", "--output-dir", str(tmp_path / "bad"), "--fold", "99", *args]) == 2


def test_report(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    """report.csv renders as text tables."""
    Report((ReportRow("popular", "live/live+catchup", "ndcg", 5, 0.5),)).write_csv(
        tmp_path / "report.csv"
    )
    assert main(["report", "--output-dir", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "== live/live+catchup ==" in out
    assert "Popular" in out
    assert (tmp_path / "report.txt").read_text(encoding="utf-8") == out

    assert main(["report", "--output-dir", str(tmp_path / "none")]) == 2


def test_overrides() -> None:
    """Only flags given on the command line become configuration keys."""
    args = build_parser().parse_args(
        ["evaluate", "--k", "5", "--k", "10", "--objective", "1,0,0,0", "--workers", "2"]
    )
    assert overrides(args) == {
        "k_values": [5, 10],
        "objective": [1.0, 0.0, 0.0, 0.0],
        "workers": 2,
    }
    synth = build_parser().parse_args(["synth", "--users", "5", "--catchup-share", "0.5"])
    assert overrides(synth) == {"synth": {"n_users": 5, "catchup_share": 0.5}}


def test_argument_errors() -> None:
    """Unknown commands and malformed objectives are usage errors."""
    with pytest.raises(SystemExit) as exc:
        main(["bogus"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit):
        main(["evaluate", "--objective", "1,0"])
