"""Tests for scored lists and the baseline recommenders."""

from __future__ import annotations

import math

from hypothesis import given, strategies as st
import numpy as np
import pytest
from scipy.sparse.linalg import norm

from tvrank.const import FeedbackSource, ScenarioKind
from tvrank.domain import FractionAtLeast, Query
from tvrank.features import HistoryStats, build_stats
from tvrank.ingestion import Dataset
from tvrank.recommenders import (
    ContentBasedRecommender,
    ModelRecommender,
    PopularRecommender,
    RandomRecommender,
    ScoredList,
    UserPopularRecommender,
    build_tfidf,
    content_based_score,
    popular_rank,
    random_rank,
    user_popular_rank,
)
from tvrank.wrmf import MfModel, WrmfParams

from .common import ALICE, BOB, DRAMA, MOVIE, NATURE, NEWS, at


def week0_stats(dataset: Dataset) -> HistoryStats:
    """Return the statistics of the first week of the hand-made dataset."""
    daily = dataset.daily(FractionAtLeast(), FeedbackSource.LIVE_AND_CATCHUP)
    return build_stats(daily, dataset.catalog, len(dataset.users), 0, 0)


def catchup_query(dataset: Dataset, user: int, qid: int = 0) -> Query:
    """Return a catch-up query over all four programs."""
    candidates = tuple(dataset.catalog.catchup_candidates(at(8, 10)))
    return Query(qid, user, at(8, 10), candidates)


def test_scored_list_breaks_ties_by_id() -> None:
    """Equal scores are ordered by ascending program id."""
    ranked = ScoredList.build([3, 1, 2], [0.5, 0.5, 0.9], scenario=ScenarioKind.LIVE_TV)
    assert ranked.ids == [2, 1, 3]
    assert ranked.scores.tolist() == [0.9, 0.5, 0.5]
    assert ranked.top(2) == [2, 1]
    assert ranked.top(10) == [2, 1, 3]
    assert ranked.scenario is ScenarioKind.LIVE_TV


def test_scored_list_validation() -> None:
    """Duplicates, disorder and an empty cut are rejected."""
    with pytest.raises(ValueError, match="duplicate"):
        ScoredList(((1, 0.5), (1, 0.4)))
    with pytest.raises(ValueError, match="out of order"):
        ScoredList(((1, 0.1), (2, 0.5)))
    with pytest.raises(ValueError, match="Invalid k"):
        ScoredList.build([1], [1.0]).top(0)


@given(st.lists(st.floats(-10, 10), min_size=1, max_size=20))
def test_build_always_yields_a_valid_list(scores: list[float]) -> None:
    """Any scores sort into a valid list over the same programs."""
    ranked = ScoredList.build(range(len(scores)), scores)
    assert sorted(ranked.ids) == list(range(len(scores)))


def test_restrict_keeps_order() -> None:
    """Filtering preserves the ranking."""
    ranked = ScoredList.build([1, 2, 3, 4], [4.0, 0.0, 2.0, 0.0])
    assert ranked.restrict(lambda _, score: score > 0).ids == [1, 3]


def test_random_rank_is_seeded() -> None:
    """The same seed gives the same permutation."""
    first = random_rank([5, 6, 7, 8, 9], 4)
    assert first == random_rank([5, 6, 7, 8, 9], 4)
    assert sorted(first.ids) == [5, 6, 7, 8, 9]


def test_random_recommender_is_seeded(dataset: Dataset) -> None:
    """Random rankings depend on the seed and query only."""
    query = catchup_query(dataset, ALICE, qid=3)
    first = RandomRecommender(dataset.catalog, 1).rank(query)
    assert first == RandomRecommender(dataset.catalog, 1).rank(query)
    assert sorted(first.ids) == [NEWS, DRAMA, NATURE, MOVIE]


def test_popular(dataset: Dataset) -> None:
    """Global positive views order the candidates."""
    stats = week0_stats(dataset)
    ranked = PopularRecommender(dataset.catalog, stats).rank(catchup_query(dataset, BOB))
    assert ranked.ids == [NEWS, DRAMA, NATURE, MOVIE]
    assert ranked.scores.tolist() == [7, 1, 0, 0]
    assert popular_rank([NATURE, DRAMA], stats, dataset.catalog).ids == [DRAMA, NATURE]


def test_user_popular_only_ranks_watched_programs(dataset: Dataset) -> None:
    """Programs the user never watched are left out."""
    stats = week0_stats(dataset)
    recommender = UserPopularRecommender(dataset.catalog, stats, dataset.user_index)
    assert recommender.rank(catchup_query(dataset, ALICE)).ids == [NEWS, DRAMA]
    assert recommender.rank(catchup_query(dataset, BOB)).ids == [NATURE]
    assert recommender.rank(catchup_query(dataset, 999)).ids == []

    candidates = [MOVIE, NATURE, DRAMA, NEWS]
    alice = dataset.user_index[ALICE]
    ranked = user_popular_rank(alice, candidates, stats, dataset.catalog)
    assert ranked.ids == [NEWS, DRAMA, NATURE, MOVIE]
    assert user_popular_rank(-1, candidates, stats, dataset.catalog).ids == sorted(candidates)


def test_tfidf_vectors(dataset: Dataset) -> None:
    """Rows are unit length or empty, with log(N / (1 + df)) weights."""
    index = build_tfidf(dataset.catalog)
    for matrix in index.vectors.values():
        norms = norm(matrix, axis=1)
        assert np.all(np.isclose(norms, 0) | np.isclose(norms, 1))
    title = index.vocabularies["title"]
    assert index.idf["title"][title["news"]] == pytest.approx(math.log(4 / 2))
    assert "the" not in index.vocabularies["description"]
    assert "ana costa" in index.vocabularies["actors"]
    program = dataset.catalog.program_index
    assert index.field_similarity("title", program[NEWS], program[NEWS]) == pytest.approx(1)
    assert index.field_similarity("title", program[NEWS], program[DRAMA]) == 0


def test_content_based(dataset: Dataset) -> None:
    """Candidates are scored by their mean field similarity to the history."""
    catalog = dataset.catalog
    index = build_tfidf(catalog)
    drama = catalog.program(DRAMA)
    assert content_based_score(drama, [drama], index, catalog) == pytest.approx(3)
    assert content_based_score(drama, [], index, catalog) == 0
    recommender = ContentBasedRecommender(
        catalog, week0_stats(dataset), index, dataset.user_index
    )
    ranked = recommender.rank(catchup_query(dataset, ALICE))
    assert ranked.ids == [DRAMA, NEWS, NATURE, MOVIE]
    assert ranked.scores.tolist() == pytest.approx([1.5, 1.0, 0, 0])


def test_model_recommender(dataset: Dataset) -> None:
    """Factor scores rank the candidates; unknown programs score 0."""
    model = MfModel(
        WrmfParams(factors=1),
        {ALICE: 0},
        {NEWS: 0, DRAMA: 1},
        np.array([[1.0]]),
        np.array([[0.2], [0.9]]),
    )
    recommender = ModelRecommender(dataset.catalog, model, "WRMF")
    ranked = recommender.rank(catchup_query(dataset, ALICE))
    assert ranked.ids == [DRAMA, NEWS, NATURE, MOVIE]
    assert ranked.scores.tolist() == pytest.approx([0.9, 0.2, 0, 0])
    assert recommender.rank(catchup_query(dataset, BOB)).scores.tolist() == [0, 0, 0, 0]
