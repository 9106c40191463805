"""Desk-scale runs of the whole pipeline (deselected by default)."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
import json
from pathlib import Path

import pytest

from tvrank.cli import main
from tvrank.const import OUTPUT_DIR_ENV, Algorithm, FeedbackSource, ScenarioKind
from tvrank.domain import FractionAtLeast
from tvrank.evaluation import (
    EvaluationSettings,
    FoldResult,
    Report,
    Scenario,
    cross_validate,
    evaluate_fold,
    fold_specs,
    make_folds,
    merge_results,
    train_models,
)
from tvrank.features import DATASET_FILE, export_dataset
from tvrank.helpers import week_start
from tvrank.ingestion import Dataset, ViewLog
from tvrank.metrics import Metric
from tvrank.synthgen import SynthParams, generate
from tvrank.wrmf import WrmfParams, fit_window

from .common import SMALL_MODELS

pytestmark = pytest.mark.slow

LIVE = Scenario(ScenarioKind.LIVE_TV)
CATCH_UP = Scenario(ScenarioKind.CATCH_UP)
LIVE_NAME = LIVE.name


@pytest.fixture(scope="module")
def desk_dataset(tmp_path_factory: pytest.TempPathFactory) -> Dataset:
    """Return the default-size synthetic dataset."""
    epg, views, _ = generate(SynthParams(), tmp_path_factory.mktemp("desk"))
    return Dataset.load(epg, views)


@pytest.fixture(scope="module")
def desk_folds(desk_dataset: Dataset) -> list[FoldResult]:
    """Return the per-fold results of both scenarios."""
    folds = fold_specs(desk_dataset.n_weeks)
    with ProcessPoolExecutor(max_workers=4) as executor:
        per_fold = executor.map(
            evaluate_fold,
            [desk_dataset] * len(folds),
            folds,
            [[LIVE, CATCH_UP]] * len(folds),
            [EvaluationSettings()] * len(folds),
        )
        return [result for results in per_fold for result in results]


@pytest.fixture(scope="module")
def desk_report(desk_folds: list[FoldResult]) -> Report:
    """Return the fold-averaged report of both scenarios."""
    return merge_results(desk_folds, EvaluationSettings())


def test_greedy_rec_trades_accuracy_for_diversity(desk_report: Report) -> None:
    """Re-ranking raises the objective, diversity and novelty at some cost in accuracy."""

    def value(algorithm: Algorithm, metric: Metric, k: int = 5) -> float:
        return desk_report.value(algorithm, LIVE_NAME, metric, k)

    for k in (5, 10):
        assert value(Algorithm.GREEDY_REC, Metric.OBJECTIVE, k) > value(
            Algorithm.L2R, Metric.OBJECTIVE, k
        )
    assert value(Algorithm.GREEDY_REC, Metric.NDCG) < value(Algorithm.L2R, Metric.NDCG)
    assert value(Algorithm.GREEDY_REC, Metric.ILD) > value(Algorithm.L2R, Metric.ILD)
    assert value(Algorithm.GREEDY_REC, Metric.MSI) > value(Algorithm.L2R, Metric.MSI)


def test_algorithm_ordering(desk_folds: list[FoldResult]) -> None:
    """Personalized rankers beat popularity, which beats random, on at least four folds."""
    live = [result for result in desk_folds if result.scenario == LIVE]
    assert len(live) == 5
    ordered = 0
    for result in live:
        ndcg = {
            algorithm: result.values[(algorithm, Metric.NDCG, 5)] for algorithm in Algorithm
        }
        middle = (Algorithm.POPULAR, Algorithm.CONTENT_BASED, Algorithm.WRMF)
        ordered += ndcg[Algorithm.L2R] >= ndcg[Algorithm.USER_POPULAR] and all(
            ndcg[Algorithm.USER_POPULAR] > ndcg[algorithm] > ndcg[Algorithm.RANDOM]
            for algorithm in middle
        )
        assert result.values.get((Algorithm.USER_POPULAR, Metric.ACCURACY_NEW, 5), 0.0) == 0
    assert ordered >= 4


def test_less_feedback_lowers_accuracy(desk_dataset: Dataset) -> None:
    """Learning from catch-up views only loses accuracy."""
    only = Scenario(ScenarioKind.CATCH_UP, FeedbackSource.CATCHUP_ONLY)
    settings = EvaluationSettings(
        algorithms=(Algorithm.USER_POPULAR, Algorithm.L2R), k_values=(5,), workers=4
    )
    report = cross_validate(desk_dataset, [CATCH_UP, only], settings)
    for algorithm in settings.algorithms:
        assert report.value(algorithm, only.name, Metric.NDCG, 5) < report.value(
            algorithm, CATCH_UP.name, Metric.NDCG, 5
        )


def test_wrmf_loss_on_synthetic_views(desk_dataset: Dataset) -> None:
    """Fifteen ALS iterations never increase the loss."""
    daily = desk_dataset.daily(FractionAtLeast(), FeedbackSource.LIVE_AND_CATCHUP)
    model = fit_window(daily.in_weeks(0, 3), WrmfParams(iterations=15))
    history = model.loss_history
    assert all(b <= a * (1 + 1e-9) for a, b in zip(history, history[1:], strict=False))


def test_deleting_the_target_week_changes_no_training_row(
    desk_dataset: Dataset, tmp_path: Path
) -> None:
    """Exported training datasets are byte-identical without the target week's views."""
    fold = make_folds(10)[0]
    cutoff = week_start(fold.target_week, desk_dataset.origin)
    kept = ViewLog(tuple(e for e in desk_dataset.log.events if e.watch_start < cutoff))
    assert kept.users == desk_dataset.users
    truncated = Dataset(desk_dataset.catalog, kept, desk_dataset.origin)
    settings = EvaluationSettings(lambdamart=replace(EvaluationSettings().lambdamart, rounds=5))
    for name, dataset in (("full", desk_dataset), ("truncated", truncated)):
        models = train_models(dataset, fold, LIVE, settings)
        export_dataset(models.train_dataset, tmp_path / name)
    full = (tmp_path / "full" / DATASET_FILE).read_bytes()
    assert full == (tmp_path / "truncated" / DATASET_FILE).read_bytes()


def test_pipeline_is_reproducible(
    tmp_path: Path, synth_files: tuple[Path, Path, Path], monkeypatch: pytest.MonkeyPatch
) -> None:
    """The same configuration gives byte-identical reports, whatever the worker count."""
    monkeypatch.delenv(OUTPUT_DIR_ENV, raising=False)
    epg, views, _ = synth_files
    config = tmp_path / "config.json"
    config.write_text(json.dumps(SMALL_MODELS), encoding="utf-8")
    args = ["--epg", str(epg), "--views", str(views), "--config", str(config), "--seed", "7"]
    reports = []
    for name, workers in (("first", "1"), ("second", "1"), ("parallel", "2")):
        out = tmp_path / name
        assert main(["evaluate", "--output-dir", str(out), "--workers", workers, *args]) == 0
        reports.append((out / "report.csv").read_bytes())
    assert reports[0] == reports[1] == reports[2]

    out = tmp_path / "first"
    assert main(["rerank", "--output-dir", str(out), *args]) == 0
    assert main(["report", "--output-dir", str(out)]) == 0
    assert (out / "reranked.jsonl").is_file()
    assert (out / "report.txt").is_file()
