"""Tests for the run configuration."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import pytest

from tvrank.config import CONFIG_RESOLVED_FILE, load_config
from tvrank.const import OUTPUT_DIR_ENV, Algorithm
from tvrank.exceptions import ConfigError


def write_config(tmp_path: Path, data: Any) -> Path:
    """Write a JSON configuration file."""
    path = tmp_path / "config.json"
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


def test_defaults() -> None:
    """An empty configuration evaluates both scenarios with every algorithm."""
    config = load_config(environ={})
    assert config.seed == 7
    assert config.output_dir == Path("runs")
    assert config.epg is None
    assert [s.name for s in config.scenarios()] == ["live/live+catchup", "catchup/live+catchup"]
    settings = config.settings()
    assert settings.algorithms == tuple(Algorithm)
    assert settings.k_values == (5, 10)
    assert settings.objective == (0.5, 0.25, 0.25, 0.0)
    assert settings.max_sessions_per_user == 5


def test_output_dir_precedence(tmp_path: Path) -> None:
    """The flag beats the environment, which beats the file."""
    path = write_config(tmp_path, {"output_dir": "from-file"})
    environ = {OUTPUT_DIR_ENV: "from-env"}
    assert load_config(path, environ={}).output_dir == Path("from-file")
    assert load_config(path, environ=environ).output_dir == Path("from-env")
    flagged = load_config(path, {"output_dir": "from-flag"}, environ)
    assert flagged.output_dir == Path("from-flag")
    assert flagged.resolved()["output_dir"] == "from-flag"


def test_flags_override_the_file(tmp_path: Path) -> None:
    """Flags replace file values; model blocks merge key by key."""
    path = write_config(
        tmp_path,
        {
            "seed": 3,
            "k_values": [5],
            "wrmf": {"factors": 8, "iterations": 2},
            "synth": {"n_users": 5},
        },
    )
    config = load_config(
        path, {"seed": 9, "wrmf": {"iterations": 4}, "synth": {"n_weeks": 2}, "folds": None}, {}
    )
    assert config.seed == 9
    settings = config.settings()
    assert settings.k_values == (5,)
    assert (settings.wrmf.factors, settings.wrmf.iterations) == (8, 4)
    params = config.synth_params()
    assert (params.n_users, params.n_weeks, params.seed) == (5, 2, 9)


def test_scenario_grid() -> None:
    """Feedback sources and extra rules multiply the scenarios; live needs live feedback."""
    config = load_config(
        overrides={"feedback": ["live+catchup", "catchup"], "extra_rules": ["minutes:10.0"]},
        environ={},
    )
    assert [s.name for s in config.scenarios()] == [
        "live/live+catchup",
        "catchup/live+catchup",
        "catchup/catchup",
        "live/live+catchup/minutes:10",
        "catchup/live+catchup/minutes:10",
        "catchup/catchup/minutes:10",
    ]
    with pytest.raises(ConfigError, match="live feedback"):
        load_config(overrides={"scenarios": ["live"], "feedback": ["catchup"]}, environ={})


@pytest.mark.parametrize(
    "data",
    [
        {"unknown": 1},
        {"k_values": [0]},
        {"k_values": []},
        {"objective": [1, 0, 0]},
        {"objective": [0, 0, 0, 0]},
        {"preference_rule": "half"},
        {"scenarios": ["radio"]},
        {"algorithms": ["svd"]},
        {"workers": 0},
        {"wrmf": {"alpha": 0}},
        {"lambdamart": {"max_leaves": 1}},
        {"synth": {"channel_loyalty": 2}},
    ],
)
def test_invalid_configuration(tmp_path: Path, data: dict[str, Any]) -> None:
    """Invalid keys and values are rejected up front."""
    with pytest.raises(ConfigError):
        load_config(write_config(tmp_path, data), environ={})


def test_unreadable_files(tmp_path: Path) -> None:
    """Missing files, broken JSON and non-objects are configuration errors."""
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.json", environ={})
    broken = tmp_path / "broken.json"
    broken.write_text("{", encoding="utf-8")
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(broken, environ={})
    with pytest.raises(ConfigError, match="JSON object"):
        load_config(write_config(tmp_path, [1, 2]), environ={})


def test_dump(tmp_path: Path) -> None:
    """The resolved configuration is written with defaults filled in."""
    config = load_config(overrides={"preference_rule": "minutes:10.0"}, environ={})
    path = config.dump(tmp_path)
    assert path.name == CONFIG_RESOLVED_FILE
    data = json.loads(path.read_text(encoding="utf-8"))
    assert data["preference_rule"] == "minutes:10"
    assert data["seed"] == 7
    assert data["output_dir"] == "runs"
