"""tvrank run configuration."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass
import json
import logging
import os
from pathlib import Path
from typing import Any

import voluptuous as vol

from .const import (
    DEFAULT_K_VALUES,
    DEFAULT_MAX_SESSIONS_PER_USER,
    DEFAULT_OBJECTIVE,
    DEFAULT_PREFERENCE_RULE,
    DEFAULT_SEED,
    DEFAULT_TRAIN_NEGATIVES,
    OUTPUT_DIR_ENV,
    Algorithm,
    FeedbackSource,
    ScenarioKind,
)
from .domain import parse_rule
from .evaluation import EvaluationSettings, Scenario
from .exceptions import ConfigError, TvRankError
from .ltr import LambdaMartParams
from .synthgen import SynthParams
from .wrmf import WrmfParams

_LOGGER = logging.getLogger(__name__)

CONFIG_RESOLVED_FILE = "config.resolved.json"
DEFAULT_OUTPUT_DIR = "runs"


def _rule(value: Any) -> str:
    try:
        return str(parse_rule(str(value)))
    except ValueError as ex:
        raise vol.Invalid(str(ex)) from ex


_POSITIVE_INT = vol.All(int, vol.Range(min=1))
_OPTIONAL_COUNT = vol.Any(None, _POSITIVE_INT)
_SHARE = vol.All(vol.Coerce(float), vol.Range(min=0, max=1))

WRMF_SCHEMA = vol.Schema(
    {
        vol.Optional("factors"): _POSITIVE_INT,
        vol.Optional("alpha"): vol.All(vol.Coerce(float), vol.Range(min=0, min_included=False)),
        vol.Optional("regularization"): vol.All(
            vol.Coerce(float), vol.Range(min=0, min_included=False)
        ),
        vol.Optional("iterations"): vol.All(int, vol.Range(min=0)),
        vol.Optional("binary"): bool,
    }
)

FUNK_SVD_SCHEMA = vol.Schema(
    {
        vol.Optional("factors"): _POSITIVE_INT,
        vol.Optional("learning_rate"): vol.All(
            vol.Coerce(float), vol.Range(min=0, min_included=False)
        ),
        vol.Optional("regularization"): vol.All(vol.Coerce(float), vol.Range(min=0)),
        vol.Optional("epochs"): vol.All(int, vol.Range(min=0)),
    }
)

LAMBDAMART_SCHEMA = vol.Schema(
    {
        vol.Optional("rounds"): vol.All(int, vol.Range(min=0)),
        vol.Optional("learning_rate"): vol.All(
            vol.Coerce(float), vol.Range(min=0, min_included=False)
        ),
        vol.Optional("max_leaves"): vol.All(int, vol.Range(min=2)),
        vol.Optional("min_samples_leaf"): _POSITIVE_INT,
        vol.Optional("truncation"): _POSITIVE_INT,
        vol.Optional("sigma"): vol.All(vol.Coerce(float), vol.Range(min=0, min_included=False)),
        vol.Optional("validation_share"): vol.All(
            vol.Coerce(float), vol.Range(min=0, max=1, max_included=False)
        ),
    }
)

SYNTH_SCHEMA = vol.Schema(
    {
        vol.Optional("n_users"): _POSITIVE_INT,
        vol.Optional("n_channels"): _POSITIVE_INT,
        vol.Optional("programs_per_week"): _POSITIVE_INT,
        vol.Optional("n_weeks"): _POSITIVE_INT,
        vol.Optional("channel_loyalty"): _SHARE,
        vol.Optional("category_affinity_concentration"): vol.All(
            vol.Coerce(float), vol.Range(min=0, min_included=False)
        ),
        vol.Optional("series_repeat_prob"): _SHARE,
        vol.Optional("daypart_regularity"): _SHARE,
        vol.Optional("catchup_share"): _SHARE,
        vol.Optional("series_share"): _SHARE,
        vol.Optional("strip_share"): _SHARE,
        vol.Optional("simulcast_share"): _SHARE,
        vol.Optional("sessions_per_week"): vol.All(
            vol.Coerce(float), vol.Range(min=0, min_included=False)
        ),
    }
)

CONFIG_SCHEMA = vol.Schema(
    {
        vol.Optional("epg"): vol.Any(None, str),
        vol.Optional("views"): vol.Any(None, str),
        vol.Optional("output_dir"): vol.Any(None, str),
        vol.Optional("seed", default=DEFAULT_SEED): vol.All(int, vol.Range(min=0)),
        vol.Optional("scenarios", default=[kind.value for kind in ScenarioKind]): vol.All(
            [vol.In([kind.value for kind in ScenarioKind])], vol.Length(min=1)
        ),
        vol.Optional("feedback", default=[FeedbackSource.LIVE_AND_CATCHUP.value]): vol.All(
            [vol.In([source.value for source in FeedbackSource])], vol.Length(min=1)
        ),
        vol.Optional("algorithms", default=[algorithm.value for algorithm in Algorithm]): vol.All(
            [vol.In([algorithm.value for algorithm in Algorithm])], vol.Length(min=1)
        ),
        vol.Optional("k_values", default=list(DEFAULT_K_VALUES)): vol.All(
            [_POSITIVE_INT], vol.Length(min=1)
        ),
        vol.Optional("objective", default=list(DEFAULT_OBJECTIVE)): vol.All(
            [vol.All(vol.Coerce(float), vol.Range(min=0))], vol.Length(min=4, max=4)
        ),
        vol.Optional("rerank_pool", default=None): _OPTIONAL_COUNT,
        vol.Optional("preference_rule", default=DEFAULT_PREFERENCE_RULE): _rule,
        vol.Optional("extra_rules", default=[]): [_rule],
        vol.Optional("weekly_reference", default=False): bool,
        vol.Optional("ndcg_empty_as_zero", default=False): bool,
        vol.Optional(
            "max_sessions_per_user", default=DEFAULT_MAX_SESSIONS_PER_USER
        ): _OPTIONAL_COUNT,
        vol.Optional("train_negatives", default=DEFAULT_TRAIN_NEGATIVES): _OPTIONAL_COUNT,
        vol.Optional("history_cap", default=None): _OPTIONAL_COUNT,
        vol.Optional("folds", default=None): _OPTIONAL_COUNT,
        vol.Optional("workers", default=1): _POSITIVE_INT,
        vol.Optional("wrmf", default={}): WRMF_SCHEMA,
        vol.Optional("funk_svd", default={}): FUNK_SVD_SCHEMA,
        vol.Optional("lambdamart", default={}): LAMBDAMART_SCHEMA,
        vol.Optional("synth", default={}): SYNTH_SCHEMA,
    },
    extra=vol.PREVENT_EXTRA,
)


@dataclass(frozen=True)
class RunConfig:
    """A validated run configuration."""

    values: dict[str, Any]
    output_dir: Path

    @property
    def seed(self) -> int:
        """Return the root seed."""
        return self.values["seed"]

    @property
    def epg(self) -> Path | None:
        """Return the EPG path, if configured."""
        return Path(self.values["epg"]) if self.values.get("epg") else None

    @property
    def views(self) -> Path | None:
        """Return the view-log path, if configured."""
        return Path(self.values["views"]) if self.values.get("views") else None

    def scenarios(self) -> list[Scenario]:
        """Return every configured scenario, rule variants last."""
        kinds = [ScenarioKind(kind) for kind in self.values["scenarios"]]
        feedbacks = [FeedbackSource(source) for source in self.values["feedback"]]
        if ScenarioKind.LIVE_TV in kinds and feedbacks == [FeedbackSource.CATCHUP_ONLY]:
            raise ConfigError("Live TV evaluation needs live feedback (use live+catchup)")
        rules = [self.values["preference_rule"], *self.values["extra_rules"]]
        return [
            Scenario(kind, feedback, parse_rule(rule))
            for rule in dict.fromkeys(rules)
            for feedback in feedbacks
            for kind in kinds
            if not (kind is ScenarioKind.LIVE_TV and feedback is FeedbackSource.CATCHUP_ONLY)
        ]

    def settings(self) -> EvaluationSettings:
        """Return the evaluation settings."""
        values = self.values
        try:
            return EvaluationSettings(
                algorithms=tuple(Algorithm(algorithm) for algorithm in values["algorithms"]),
                k_values=tuple(values["k_values"]),
                objective=tuple(values["objective"]),
                rerank_pool=values["rerank_pool"],
                weekly_reference=values["weekly_reference"],
                ndcg_empty_as_zero=values["ndcg_empty_as_zero"],
                max_sessions_per_user=values["max_sessions_per_user"],
                train_negatives=values["train_negatives"],
                history_cap=values["history_cap"],
                folds=values["folds"],
                workers=values["workers"],
                seed=values["seed"],
                wrmf=WrmfParams(**values["wrmf"]),
                funk_svd=dict(values["funk_svd"]),
                lambdamart=LambdaMartParams(**values["lambdamart"]),
            )
        except TvRankError as ex:
            raise ConfigError(str(ex)) from ex

    def synth_params(self) -> SynthParams:
        """Return the generator parameters under the root seed."""
        try:
            return SynthParams(**self.values["synth"], seed=self.seed)
        except ValueError as ex:
            raise ConfigError(str(ex)) from ex

    def resolved(self) -> dict[str, Any]:
        """Return the configuration with defaults filled in."""
        return {**self.values, "output_dir": str(self.output_dir)}

    def dump(self, directory: Path | str) -> Path:
        """Write the resolved configuration into ``directory``."""
        path = Path(directory) / CONFIG_RESOLVED_FILE
        path.write_text(json.dumps(self.resolved(), indent=2, sort_keys=True) + "\n", "utf-8")
        return path


def read_config_file(path: Path | str) -> dict[str, Any]:
    """Read a JSON configuration file."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as ex:
        raise ConfigError(f"{path}: cannot read configuration: {ex}") from ex
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: configuration must be a JSON object")
    return data


def load_config(
    path: Path | str | None = None,
    overrides: Mapping[str, Any] | None = None,
    environ: Mapping[str, str] | None = None,
) -> RunConfig:
    """Validate a configuration file merged with flag overrides.

    Flags win over the environment, which wins over the file, for the output
    directory; every other key comes from the flags or the file only.
    """
    raw = read_config_file(path) if path is not None else {}
    flags = {key: value for key, value in (overrides or {}).items() if value is not None}
    for block in ("wrmf", "funk_svd", "lambdamart", "synth"):
        if block in flags and isinstance(raw.get(block), dict):
            flags[block] = {**raw[block], **flags[block]}
    merged = {**raw, **flags}
    try:
        values = CONFIG_SCHEMA(merged)
    except vol.Invalid as ex:
        raise ConfigError(f"Invalid configuration: {ex}") from ex

    environ = os.environ if environ is None else environ
    output_dir = flags.get("output_dir") or environ.get(OUTPUT_DIR_ENV) or raw.get("output_dir")
    config = RunConfig(values, Path(output_dir or DEFAULT_OUTPUT_DIR))
    config.scenarios()
    config.settings()
    _LOGGER.debug("Resolved configuration: %s", config.resolved())
    return config
