"""tvrank command line: synth, ingest, train, evaluate, rerank and report."""

from __future__ import annotations

import argparse
from collections.abc import Callable, Sequence
import json
import logging
from pathlib import Path
import shutil
from typing import Any

import colorlog

from .config import CONFIG_RESOLVED_FILE, RunConfig, load_config
from .const import Algorithm, FeedbackSource, ScenarioKind
from .domain import parse_rule
from .evaluation import (
    FoldSpec,
    Report,
    cross_validate,
    fold_specs,
    rerank_lists,
    train_models,
)
from .exceptions import ConfigError, TvRankError
from .features import export_dataset
from .ingestion import Dataset, summarize
from .synthgen import EPG_FILE, MANIFEST_FILE, VIEWS_FILE, generate

_LOGGER = logging.getLogger(__name__)

RUN_LOG_FILE = "run.log"
SUMMARY_FILE = "summary.json"
REPORT_FILE = "report.csv"
REPORT_TEXT_FILE = "report.txt"
RERANK_FILE = "reranked.jsonl"
MODELS_DIR = "models"

LOG_FORMAT = "%(asctime)s %(levelname)s (%(processName)s) [%(name)s] %(message)s"
COLOR_FORMAT = f"%(log_color)s{LOG_FORMAT}%(reset)s"


class Run:
    """Outputs created by one command, removed again if the command fails."""

    def __init__(self, config: RunConfig) -> None:
        """Initialize the run."""
        self.config = config
        self.directory = config.output_dir
        self.created: list[Path] = []
        self._created_dir = not self.directory.exists()
        self._handler: logging.Handler | None = None

    def path(self, name: str) -> Path:
        """Return an output path, remembering it for cleanup."""
        path = self.directory / name
        if not path.exists():
            self.created.append(path)
        return path

    def __enter__(self) -> Run:
        """Create the output directory and start the run log."""
        self.directory.mkdir(parents=True, exist_ok=True)
        self._handler = logging.FileHandler(self.path(RUN_LOG_FILE), encoding="utf-8")
        self._handler.setFormatter(logging.Formatter(LOG_FORMAT))
        logging.getLogger().addHandler(self._handler)
        self.path(CONFIG_RESOLVED_FILE)
        self.config.dump(self.directory)
        _LOGGER.info("%s: Root seed %s", self.directory, self.config.seed)
        _LOGGER.info("%s: Resolved configuration %s", self.directory, self.config.resolved())
        return self

    def __exit__(self, exc_type: type[BaseException] | None, *_: Any) -> None:
        """Close the run log, removing partial outputs on failure."""
        if self._handler is not None:
            logging.getLogger().removeHandler(self._handler)
            self._handler.close()
        if exc_type is None:
            return
        for path in reversed(self.created):
            if path.is_dir():
                shutil.rmtree(path, ignore_errors=True)
            else:
                path.unlink(missing_ok=True)
        if self._created_dir and self.directory.exists() and not any(self.directory.iterdir()):
            self.directory.rmdir()


def setup_logging(verbose: bool) -> None:
    """Install the colored console handler."""
    handler = colorlog.StreamHandler()
    handler.setFormatter(
        colorlog.ColoredFormatter(
            COLOR_FORMAT,
            log_colors={
                "DEBUG": "cyan",
                "INFO": "green",
                "WARNING": "yellow",
                "ERROR": "red",
                "CRITICAL": "red,bg_white",
            },
        )
    )
    root = logging.getLogger()
    root.handlers = [handler]
    root.setLevel(logging.DEBUG if verbose else logging.INFO)


def _input_paths(config: RunConfig) -> tuple[Path, Path]:
    epg = config.epg or config.output_dir / EPG_FILE
    views = config.views or config.output_dir / VIEWS_FILE
    for path in (epg, views):
        if not path.is_file():
            raise ConfigError(f"{path}: input file not found")
    return epg, views


def _fold(dataset: Dataset, number: int | None) -> FoldSpec:
    folds = fold_specs(dataset.n_weeks)
    if number is None:
        return folds[-1]
    if not 1 <= number <= len(folds):
        raise ConfigError(f"Invalid fold: {number} (range is 1-{len(folds)})")
    return folds[number - 1]


def cmd_synth(run: Run, args: argparse.Namespace) -> None:
    """Generate a synthetic EPG and view log."""
    params = run.config.synth_params()
    for name in (EPG_FILE, VIEWS_FILE, MANIFEST_FILE):
        run.path(name)
    generate(params, run.directory)


def cmd_ingest(run: Run, args: argparse.Namespace) -> None:
    """Validate the inputs and print the dataset summary."""
    dataset = Dataset.load(*_input_paths(run.config))
    summary = summarize(dataset, parse_rule(run.config.values["preference_rule"]))
    path = run.path(SUMMARY_FILE)
    path.write_text(json.dumps(summary.as_dict(), indent=2, sort_keys=True) + "\n", "utf-8")
    for key, value in summary.as_dict().items():
        print(f"{key:>18}: {value:.2f}" if isinstance(value, float) else f"{key:>18}: {value}")


def cmd_train(run: Run, args: argparse.Namespace) -> None:
    """Train every model of one fold and serialize them."""
    dataset = Dataset.load(*_input_paths(run.config))
    fold = _fold(dataset, args.fold)
    scenario = run.config.scenarios()[0]
    models = train_models(dataset, fold, scenario, run.config.settings())
    directory = run.path(MODELS_DIR)
    directory.mkdir(exist_ok=True)
    if models.train.wrmf is not None:
        models.train.wrmf.save(directory / "wrmf.json")
    if models.train.funk is not None:
        (directory / "funk_svd.json").write_text(
            json.dumps(models.train.funk.as_dict(), sort_keys=True) + "\n", "utf-8"
        )
    models.ranker.save(directory / "lambdamart.json")
    export_dataset(models.train_dataset, directory)
    _LOGGER.info("%s: Saved the models of %s %s", directory, fold, scenario.name)


def cmd_evaluate(run: Run, args: argparse.Namespace) -> None:
    """Cross-validate every scenario and write report.csv."""
    dataset = Dataset.load(*_input_paths(run.config))
    report = cross_validate(dataset, run.config.scenarios(), run.config.settings())
    path = run.path(REPORT_FILE)
    report.write_csv(path)
    _LOGGER.info("%s: Wrote %s rows", path, len(report.rows))
    print(report.render(), end="")


def cmd_rerank(run: Run, args: argparse.Namespace) -> None:
    """Write L2R and GreedyRec lists of one fold's target week."""
    dataset = Dataset.load(*_input_paths(run.config))
    fold = _fold(dataset, args.fold)
    scenario = run.config.scenarios()[0]
    lists = rerank_lists(dataset, fold, scenario, run.config.settings())
    path = run.path(RERANK_FILE)
    with path.open("w", encoding="utf-8") as file:
        for entry in lists:
            file.write(json.dumps(entry, sort_keys=True) + "\n")
    _LOGGER.info("%s: Wrote %s re-ranked lists", path, len(lists))


def cmd_report(run: Run, args: argparse.Namespace) -> None:
    """Render report.csv as text tables."""
    source = Path(args.report) if args.report else run.directory / REPORT_FILE
    if not source.is_file():
        raise ConfigError(f"{source}: report not found")
    text = Report.read_csv(source).render()
    run.path(REPORT_TEXT_FILE).write_text(text, "utf-8")
    print(text, end="")


COMMANDS: dict[str, Callable[[Run, argparse.Namespace], None]] = {
    "synth": cmd_synth,
    "ingest": cmd_ingest,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "rerank": cmd_rerank,
    "report": cmd_report,
}


def _objective(value: str) -> list[float]:
    try:
        weights = [float(part) for part in value.split(",")]
    except ValueError as ex:
        raise argparse.ArgumentTypeError(f"invalid objective: {value!r}") from ex
    if len(weights) != 4:
        raise argparse.ArgumentTypeError(f"invalid objective: {value!r} (expected 4 weights)")
    return weights


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="JSON run configuration")
    parser.add_argument("--output-dir", dest="output_dir", help="output directory")
    parser.add_argument("--seed", type=int, help="root seed")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")


def _add_data(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--epg", help="EPG CSV file")
    parser.add_argument("--views", help="view-log JSONL file")
    parser.add_argument(
        "--preference-rule", dest="preference_rule", help="fraction:0.5 or minutes:10"
    )


def _add_evaluation(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--scenario", dest="scenarios", action="append", choices=[k.value for k in ScenarioKind]
    )
    parser.add_argument(
        "--feedback", action="append", choices=[f.value for f in FeedbackSource]
    )
    parser.add_argument(
        "--algorithm", dest="algorithms", action="append", choices=[a.value for a in Algorithm]
    )
    parser.add_argument("--k", dest="k_values", type=int, action="append")
    parser.add_argument("--objective", type=_objective, help="w_acc,w_div,w_nov,w_ser")
    parser.add_argument("--rerank-pool", dest="rerank_pool", type=int)
    parser.add_argument("--extra-rule", dest="extra_rules", action="append")
    parser.add_argument(
        "--weekly-reference", dest="weekly_reference", action="store_true", default=None
    )
    parser.add_argument(
        "--ndcg-empty-as-zero", dest="ndcg_empty_as_zero", action="store_true", default=None
    )
    parser.add_argument("--max-sessions-per-user", dest="max_sessions_per_user", type=int)
    parser.add_argument("--train-negatives", dest="train_negatives", type=int)
    parser.add_argument("--history-cap", dest="history_cap", type=int)
    parser.add_argument("--folds", type=int, help="number of folds to run")
    parser.add_argument("--workers", type=int)


SYNTH_FLAGS = {
    "users": ("n_users", int),
    "channels": ("n_channels", int),
    "programs-per-week": ("programs_per_week", int),
    "weeks": ("n_weeks", int),
    "channel-loyalty": ("channel_loyalty", float),
    "category-affinity-concentration": ("category_affinity_concentration", float),
    "series-repeat-prob": ("series_repeat_prob", float),
    "daypart-regularity": ("daypart_regularity", float),
    "catchup-share": ("catchup_share", float),
}


def build_parser() -> argparse.ArgumentParser:
    """Return the argument parser."""
    parser = argparse.ArgumentParser(
        prog="tvrank", description="Live and Catch-up TV recommendation experiments"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    synth = commands.add_parser("synth", help="generate a synthetic dataset")
    _add_common(synth)
    for flag, (key, kind) in SYNTH_FLAGS.items():
        synth.add_argument(f"--{flag}", dest=f"synth_{key}", type=kind)

    ingest = commands.add_parser("ingest", help="validate inputs and summarize the dataset")
    _add_common(ingest)
    _add_data(ingest)

    for name, text in (
        ("train", "train and save the models of one fold"),
        ("evaluate", "cross-validate every algorithm"),
        ("rerank", "re-rank one fold's lists with GreedyRec"),
    ):
        command = commands.add_parser(name, help=text)
        _add_common(command)
        _add_data(command)
        _add_evaluation(command)
        if name != "evaluate":
            command.add_argument("--fold", type=int, help="1-based fold (default: last)")

    report = commands.add_parser("report", help="render report.csv as tables")
    _add_common(report)
    report.add_argument("--report", help="report CSV (default: <output-dir>/report.csv)")
    return parser


def overrides(args: argparse.Namespace) -> dict[str, Any]:
    """Return the config keys set on the command line."""
    values = {
        key: value
        for key, value in vars(args).items()
        if key not in {"command", "config", "verbose", "fold", "report"}
        and not key.startswith("synth_")
        and value is not None
    }
    if synth := {
        key.removeprefix("synth_"): value
        for key, value in vars(args).items()
        if key.startswith("synth_") and value is not None
    }:
        values["synth"] = synth
    return values


def main(argv: Sequence[str] | None = None) -> int:
    """Run a command and return the exit code."""
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose)
    try:
        config = load_config(args.config, overrides(args))
        with Run(config) as run:
            COMMANDS[args.command](run, args)
    except TvRankError as ex:
        _LOGGER.error("%s: %s", args.command, ex)
        return 2
    return 0
