"""Tests for folds, query construction and cross-validation."""

from __future__ import annotations

from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from tvrank.const import AccuracySource, Algorithm, FeedbackSource, ScenarioKind, ViewMode
from tvrank.domain import FractionAtLeast, MinutesAtLeast, ViewEvent
from tvrank.evaluation import (
    EvaluationSettings,
    FoldResult,
    FoldSpec,
    Report,
    ReportRow,
    Scenario,
    build_queries,
    cross_validate,
    fold_specs,
    make_folds,
    merge_results,
    rerank_lists,
    sessions,
    train_models,
    watched_programs,
)
from tvrank.exceptions import ConfigError, TvRankError
from tvrank.helpers import week_start
from tvrank.ingestion import Catalog, Dataset, ViewLog
from tvrank.metrics import Metric

from .common import ALICE, BOB, DRAMA, MOVIE, NATURE, NEWS, at

LIVE = Scenario(ScenarioKind.LIVE_TV)
CATCH_UP = Scenario(ScenarioKind.CATCH_UP)


def test_make_folds() -> None:
    """Ten weeks give five sliding folds of four history weeks."""
    folds = make_folds(10)
    assert len(folds) == 5
    assert folds[0] == FoldSpec((0, 1, 2, 3), 4, 5)
    assert folds[-1] == FoldSpec((4, 5, 6, 7), 8, 9)
    assert folds[0].target_history_weeks == (1, 2, 3, 4)
    assert str(folds[0]) == "weeks 1-6"
    assert len(make_folds(7, history_weeks=2)) == 4
    with pytest.raises(ValueError, match="total weeks"):
        make_folds(5)
    with pytest.raises(ValueError, match="consecutive"):
        FoldSpec((0, 2), 3, 4)
    with pytest.raises(ConfigError):
        fold_specs(3)


def test_scenario_names() -> None:
    """Scenario labels parse back; live evaluation needs live feedback."""
    assert LIVE.name == "live/live+catchup"
    assert LIVE.mode is ViewMode.LIVE
    assert CATCH_UP.mode is ViewMode.CATCHUP
    custom = Scenario(ScenarioKind.CATCH_UP, FeedbackSource.CATCHUP_ONLY, MinutesAtLeast(10))
    assert custom.name == "catchup/catchup/minutes:10"
    assert Scenario.parse(custom.name) == custom
    assert Scenario.parse("live/live+catchup") == LIVE
    with pytest.raises(ConfigError):
        Scenario(ScenarioKind.LIVE_TV, FeedbackSource.CATCHUP_ONLY)
    for bad in ("live", "tv/live+catchup", "catchup/live+catchup/seconds:3"):
        with pytest.raises(ConfigError):
            Scenario.parse(bad)


def test_sessions_split_on_gaps() -> None:
    """Views closer than the gap form one session; users never share one."""
    events = [
        ViewEvent(ALICE, NEWS, 1, at(0, 19), 1800),
        ViewEvent(ALICE, DRAMA, 1, at(0, 19, 50), 600),
        ViewEvent(ALICE, DRAMA, 1, at(0, 21), 600),
        ViewEvent(BOB, NATURE, 2, at(0, 21, 5), 600),
    ]
    found = sessions(events)
    assert [(s.user, len(s.events)) for s in found] == [(ALICE, 2), (ALICE, 1), (BOB, 1)]
    assert found[1].start == at(0, 21)


def test_watched_programs(catalog: Catalog) -> None:
    """Partial views of one program are summed before the rule applies."""
    events = [
        ViewEvent(ALICE, NEWS, 1, at(0, 19), 600),
        ViewEvent(ALICE, NEWS, 1, at(0, 19, 15), 600),
        ViewEvent(ALICE, DRAMA, 1, at(0, 20), 600),
    ]
    assert watched_programs(events, catalog, FractionAtLeast()) == {NEWS}
    assert watched_programs(events, catalog, MinutesAtLeast(5)) == {NEWS, DRAMA}


def test_live_queries_are_capped(dataset: Dataset) -> None:
    """Each user contributes at most five sampled sessions per week."""
    queries, counts = build_queries(dataset, 1, LIVE, seed=3)
    assert len(queries) == counts.sessions == 5
    assert [q.qid for q in queries] == [0, 1, 2, 3, 4]
    assert all(q.user == ALICE for q in queries)
    assert all(q.program_ids == [NEWS] and q.truth == {NEWS} for q in queries)
    times = [q.time for q in queries]
    assert times == sorted(times)
    assert set(times) <= {at(day, 19) for day in range(7, 14)}

    every, _ = build_queries(dataset, 1, LIVE, seed=3, max_sessions=None, qid_start=10)
    assert [q.time for q in every] == [at(day, 19) for day in range(7, 14)]
    assert every[0].qid == 10


def test_empty_truth_is_counted(dataset: Dataset) -> None:
    """Short views give sessions without truth; a lower threshold labels them."""
    queries, counts = build_queries(dataset, 0, LIVE, seed=1)
    assert counts.sessions == 7
    assert counts.empty_truth == 2
    bob = [q for q in queries if q.user == BOB]
    assert [q.time for q in bob] == [at(0, 20), at(1, 20)]
    assert all(q.program_ids == [DRAMA, NATURE] and not q.truth for q in bob)

    minutes = Scenario(ScenarioKind.LIVE_TV, rule=MinutesAtLeast(5))
    _, counts = build_queries(dataset, 0, minutes, seed=1)
    assert counts.empty_truth == 0


def test_catchup_queries(dataset: Dataset) -> None:
    """Catch-up candidates cover the past week; negatives can be subsampled."""
    (query,), _ = build_queries(dataset, 1, CATCH_UP, seed=0)
    assert query.user == BOB
    assert query.time == at(8, 10)
    assert query.program_ids == [NEWS, DRAMA, NATURE, MOVIE]
    assert query.truth == {NATURE}

    (sampled,), _ = build_queries(dataset, 1, CATCH_UP, seed=0, negatives=1)
    assert len(sampled.candidates) == 2
    assert NATURE in sampled.program_ids

    (only,), _ = build_queries(
        dataset, 1, CATCH_UP, seed=0, feedback=FeedbackSource.CATCHUP_ONLY
    )
    assert only == query

    (weekly,), _ = build_queries(dataset, 1, CATCH_UP, seed=0, weekly=True)
    assert weekly.time == at(14, 0)
    assert weekly.program_ids == [NEWS, DRAMA, NATURE, MOVIE]
    assert weekly.truth == {NATURE}


def test_settings_validation() -> None:
    """List sizes, workers and objective weights are checked."""
    with pytest.raises(ConfigError):
        EvaluationSettings(k_values=())
    with pytest.raises(ConfigError):
        EvaluationSettings(k_values=(0, 5))
    with pytest.raises(ConfigError):
        EvaluationSettings(workers=0)
    with pytest.raises(ConfigError):
        EvaluationSettings(objective=(0, 0, 0, 0))
    spec = EvaluationSettings().objective_spec(10, AccuracySource.GROUND_TRUTH)
    assert spec.k == 10
    assert spec.weights == (0.5, 0.25, 0.25, 0.0)


def test_training_ignores_the_target_week(
    synth_dataset: Dataset, fast_settings: EvaluationSettings
) -> None:
    """Changing views from the target week on leaves every trained model unchanged."""
    fold = fold_specs(synth_dataset.n_weeks)[0]
    cutoff = week_start(fold.target_week, synth_dataset.origin)
    events = tuple(
        replace(event, watched_seconds=1) if event.watch_start >= cutoff else event
        for event in synth_dataset.log.events
    )
    assert events != synth_dataset.log.events
    perturbed = Dataset(synth_dataset.catalog, ViewLog(events), synth_dataset.origin)

    full = train_models(synth_dataset, fold, LIVE, fast_settings)
    other = train_models(perturbed, fold, LIVE, fast_settings)
    assert full.train.stats.first_week == 0
    assert full.target.stats.last_week == fold.train_label_week
    features = full.train_dataset.features
    assert np.array_equal(features, other.train_dataset.features)
    assert np.array_equal(full.train_dataset.labels, other.train_dataset.labels)
    assert np.allclose(full.ranker.predict(features), other.ranker.predict(features))
    assert np.array_equal(full.target.stats.program_views, other.target.stats.program_views)


def test_cross_validate(synth_dataset: Dataset, fast_settings: EvaluationSettings) -> None:
    """A one-fold run reports bounded metrics for every scenario."""
    settings = replace(fast_settings, folds=1, k_values=(5,))
    report = cross_validate(synth_dataset, [LIVE, CATCH_UP], settings)
    assert report.scenarios == [LIVE.name, CATCH_UP.name]
    assert {row.k for row in report.rows} == {5}
    assert all(-1e-9 <= row.value <= 1 + 1e-9 for row in report.rows)
    for scenario in report.scenarios:
        assert 0 <= report.value(Algorithm.POPULAR, scenario, Metric.NDCG, 5) <= 1
    with pytest.raises(KeyError):
        report.value(Algorithm.POPULAR, LIVE.name, Metric.NDCG, 10)


def test_rerank_lists(synth_dataset: Dataset, fast_settings: EvaluationSettings) -> None:
    """Re-ranked lists are as long as the ranker's and score within [0, 1]."""
    settings = replace(fast_settings, k_values=(5,))
    fold = fold_specs(synth_dataset.n_weeks)[0]
    lists = rerank_lists(synth_dataset, fold, LIVE, settings)
    assert lists
    for row in lists:
        assert len(row["greedy_rec"]) == len(row["l2r"]) <= 5
        assert len(set(row["greedy_rec"])) == len(row["greedy_rec"])
        assert 0 <= row["objective"] <= 1
        assert row["time"].endswith("Z")


def test_merge_results_averages_folds() -> None:
    """Fold values are averaged per scenario, algorithm, metric and k."""
    settings = EvaluationSettings(algorithms=(Algorithm.RANDOM,), k_values=(5,))
    key = (Algorithm.RANDOM, Metric.NDCG, 5)
    results = [
        FoldResult(fold, LIVE, {key: value}, 1, 1)
        for fold, value in zip(make_folds(7), (0.2, 0.4), strict=True)
    ]
    report = merge_results(results, settings)
    (row,) = report.rows
    assert (row.algorithm, row.scenario, row.metric, row.k) == ("random", LIVE.name, "ndcg", 5)
    assert row.value == pytest.approx(0.3)


def sample_report() -> Report:
    """Return a two-scenario report."""
    return Report(
        (
            ReportRow("random", LIVE.name, "ndcg", 5, 0.5),
            ReportRow("greedy_rec", LIVE.name, "ild", 5, 0.25),
            ReportRow("popular", CATCH_UP.name, "ndcg", 10, 0.125),
        )
    )


def test_report_csv(tmp_path: Path) -> None:
    """Reports survive a CSV round trip; other files are rejected."""
    report = sample_report()
    report.write_csv(tmp_path / "report.csv")
    lines = (tmp_path / "report.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "algorithm,scenario,metric,k,value"
    assert lines[1] == "random,live/live+catchup,ndcg,5,0.500000"
    assert Report.read_csv(tmp_path / "report.csv") == report

    (tmp_path / "other.csv").write_text("a,b\n1,2\n", encoding="utf-8")
    with pytest.raises(TvRankError, match="not a report"):
        Report.read_csv(tmp_path / "other.csv")


def test_report_render() -> None:
    """One table per scenario with labeled columns and dashes for gaps."""
    text = sample_report().render()
    assert text.count("== ") == 2
    assert "== live/live+catchup ==" in text
    assert "Accuracy @5" in text
    assert "Serendipity @10" in text
    random_row = next(line for line in text.splitlines() if line.startswith("Random"))
    assert "0.500" in random_row
    assert "-" in random_row
    assert "GreedyRec" in text
    assert "Popular" in text
