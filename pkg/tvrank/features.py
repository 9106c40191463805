"""tvrank features: window statistics and the <user, program> feature schema."""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from datetime import datetime
from enum import StrEnum
from functools import cached_property
import json
import logging
from pathlib import Path
from typing import Any, Protocol

import numpy as np
from scipy import sparse
from sklearn.datasets import dump_svmlight_file

from .const import (
    CATEGORY_CODES,
    FUNK_EPOCHS,
    FUNK_FACTORS,
    FUNK_LEARNING_RATE,
    FUNK_REGULARIZATION,
    RECENT_WEEKS,
    DayPart,
)
from .domain import Airing, ProgramId, Quadruple, Query, UserId
from .exceptions import TrainingError
from .helpers import day_parts, epoch, weekdays
from .ingestion import Catalog, DailyViews
from .ltr import RankingDataset

_LOGGER = logging.getLogger(__name__)

SCHEMA_FILE = "schema.json"
DATASET_FILE = "dataset.svmlight"


class FeatureGroup(StrEnum):
    """Feature classes."""

    REPETITION = "repetition"
    CATEGORY = "category"
    TIME = "time"
    TEXT = "text"
    CHARACTERISTICS = "characteristics"
    COLLABORATIVE = "collaborative"
    PRESENCE = "presence"
    RECENCY = "recency"


def _share(values: np.ndarray, totals: np.ndarray) -> np.ndarray:
    """Divide rows by their totals, leaving empty rows at 0."""
    totals = np.asarray(totals, dtype=np.float64)
    safe = np.where(totals > 0, totals, 1.0)
    shape = (-1,) + (1,) * (values.ndim - 1)
    return np.where(totals.reshape(shape) > 0, values / safe.reshape(shape), 0.0)


def _pair_matrix(
    rows: np.ndarray,
    cols: np.ndarray,
    values: np.ndarray,
    shape: tuple[int, int],
    reduce: str = "sum",
) -> sparse.csr_matrix:
    """Aggregate (row, col, value) triples into a CSR matrix."""
    if reduce == "sum":
        return sparse.coo_matrix((values, (rows, cols)), shape=shape).tocsr()
    keys = rows.astype(np.int64) * shape[1] + cols
    unique, inverse = np.unique(keys, return_inverse=True)
    reduced = np.full(len(unique), -np.inf)
    np.maximum.at(reduced, inverse, values)
    return sparse.csr_matrix(
        (reduced, (unique // shape[1], unique % shape[1])), shape=shape
    )


@dataclass(frozen=True)
class HistoryStats:
    """Per-user and global counters over a week window."""

    first_week: int
    last_week: int
    n_users: int
    user_views: sparse.csr_matrix
    user_seconds: sparse.csr_matrix
    user_episodes: sparse.csr_matrix
    user_last_watch: sparse.csr_matrix
    user_total_seconds: np.ndarray
    user_channel_seconds: np.ndarray
    user_category_seconds: np.ndarray
    user_subcategory_seconds: np.ndarray
    user_slot_seconds: np.ndarray
    program_views: np.ndarray
    program_audience: np.ndarray
    category_seconds: np.ndarray
    subcategory_seconds: np.ndarray
    history: tuple[np.ndarray, ...]
    history_channels: tuple[np.ndarray, ...]
    title_tokens: tuple[frozenset[str], ...]
    recent: dict[int, HistoryStats] = field(default_factory=dict, repr=False)

    @property
    def n_programs(self) -> int:
        """Return the number of catalog programs."""
        return len(self.program_views)

    @cached_property
    def channel_share(self) -> np.ndarray:
        """Return each user's watch-time share per channel."""
        return _share(self.user_channel_seconds, self.user_total_seconds)

    @cached_property
    def category_share(self) -> np.ndarray:
        """Return each user's watch-time share per category."""
        return _share(self.user_category_seconds, self.user_total_seconds)

    @cached_property
    def subcategory_share(self) -> np.ndarray:
        """Return each user's watch-time share per subcategory."""
        return _share(self.user_subcategory_seconds, self.user_total_seconds)

    @cached_property
    def daypart_share(self) -> np.ndarray:
        """Return each user's watch-time share per day part."""
        return _share(self.user_slot_seconds.sum(axis=1), self.user_total_seconds)

    @cached_property
    def global_category_share(self) -> np.ndarray:
        """Return the watch-time share of every category over all users."""
        return _share(self.category_seconds[None, :], np.array([self.category_seconds.sum()]))[0]

    @cached_property
    def global_subcategory_share(self) -> np.ndarray:
        """Return the watch-time share of every subcategory over all users."""
        return _share(
            self.subcategory_seconds[None, :], np.array([self.subcategory_seconds.sum()])
        )[0]

    @cached_property
    def rank_quantile(self) -> np.ndarray:
        """Return the share of programs watched strictly less than each program."""
        ordered = np.sort(self.program_views)
        below = np.searchsorted(ordered, self.program_views, side="left")
        return below / max(1, self.n_programs - 1)

    def row(self, matrix: sparse.csr_matrix, user: int) -> np.ndarray:
        """Return a dense per-program row of a user matrix (zeros for unknown users)."""
        if user < 0:
            return np.zeros(self.n_programs)
        return matrix.getrow(user).toarray().ravel()

    @cached_property
    def active_users(self) -> int:
        """Return the number of users with any view in the window."""
        return int(np.count_nonzero(self.user_total_seconds))

    def history_of(self, user: int, cap: int | None = None) -> np.ndarray:
        """Return the programs a user watched, most recent first."""
        if user < 0:
            return np.zeros(0, dtype=np.int64)
        history = self.history[user]
        return history if cap is None else history[:cap]


def build_stats(
    daily: DailyViews,
    catalog: Catalog,
    n_users: int,
    first_week: int,
    last_week: int,
    recent: Sequence[int] = RECENT_WEEKS,
) -> HistoryStats:
    """Compute window counters strictly from the views of weeks ``first_week``-``last_week``."""
    if last_week < first_week:
        raise ValueError(f"Invalid window: weeks {first_week}-{last_week} (window is empty)")
    views = daily.in_weeks(first_week, last_week)
    arrays = catalog.arrays
    n_programs, n_channels = len(catalog), len(catalog.channels)
    shape = (n_users, n_programs)
    positive = views.preference == 1
    users, programs, seconds = views.user_idx, views.program_idx, views.seconds

    user_total = np.bincount(users, weights=seconds, minlength=n_users)
    channel_seconds = np.zeros((n_users, n_channels))
    np.add.at(channel_seconds, (users, views.channel_idx), seconds)
    category_seconds = np.zeros((n_users, len(CATEGORY_CODES)))
    np.add.at(category_seconds, (users, arrays.category[programs]), seconds)
    subcategory_seconds = np.zeros((n_users, len(catalog.subcategories)))
    np.add.at(subcategory_seconds, (users, arrays.subcategory[programs]), seconds)
    slot_seconds = np.zeros((n_users, 7, len(DayPart)))
    np.add.at(
        slot_seconds,
        (users, weekdays(views.first_watch), day_parts(views.first_watch)),
        seconds,
    )

    audience = sparse.coo_matrix(
        (np.ones(positive.sum()), (users[positive], programs[positive])), shape=shape
    ).tocsr()
    audience.data[:] = 1.0

    # recency order of positive history, most recent first, one entry per program
    order = np.lexsort((programs[positive], -views.last_watch[positive], users[positive]))
    pos_users = users[positive][order]
    pos_programs = programs[positive][order]
    pos_channels = views.channel_idx[positive][order]
    history: list[np.ndarray] = []
    history_channels: list[np.ndarray] = []
    tokens: list[frozenset[str]] = []
    bounds = np.searchsorted(pos_users, np.arange(n_users + 1))
    for user in range(n_users):
        user_programs = pos_programs[bounds[user] : bounds[user + 1]]
        _, first = np.unique(user_programs, return_index=True)
        keep = np.sort(first)
        history.append(user_programs[keep])
        history_channels.append(pos_channels[bounds[user] : bounds[user + 1]][keep])
        tokens.append(frozenset().union(*(arrays.title_tokens[p] for p in history[-1])))

    stats = HistoryStats(
        first_week=first_week,
        last_week=last_week,
        n_users=n_users,
        user_views=_pair_matrix(users, programs, np.ones(len(views)), shape),
        user_seconds=_pair_matrix(users, programs, seconds, shape),
        user_episodes=_pair_matrix(
            users[positive], programs[positive], np.ones(positive.sum()), shape
        ),
        user_last_watch=_pair_matrix(
            users, programs, views.last_watch.astype(np.float64), shape, reduce="max"
        ),
        user_total_seconds=user_total,
        user_channel_seconds=channel_seconds,
        user_category_seconds=category_seconds,
        user_subcategory_seconds=subcategory_seconds,
        user_slot_seconds=slot_seconds,
        program_views=np.bincount(programs[positive], minlength=n_programs).astype(np.float64),
        program_audience=np.asarray(audience.sum(axis=0)).ravel(),
        category_seconds=category_seconds.sum(axis=0),
        subcategory_seconds=subcategory_seconds.sum(axis=0),
        history=tuple(history),
        history_channels=tuple(history_channels),
        title_tokens=tuple(tokens),
    )
    for weeks in recent:
        stats.recent[weeks] = build_stats(
            daily, catalog, n_users, max(first_week, last_week - weeks + 1), last_week, ()
        )
    _LOGGER.debug(
        "weeks %s-%s: Built stats from %s daily records", first_week, last_week, len(views)
    )
    return stats


class PairScorer(Protocol):
    """Scores programs for a user from a factorization model."""

    def score(self, user: UserId, programs: Sequence[ProgramId]) -> np.ndarray:
        """Return one score per program, 0 for unknown ids."""

    def known(self, user: UserId, programs: Sequence[ProgramId]) -> np.ndarray:
        """Return whether both user and program have factors."""


class ContentScorer(Protocol):
    """Scores programs against a user's history by content similarity."""

    def score_history(self, history: np.ndarray, programs: np.ndarray) -> np.ndarray:
        """Return the content similarity of each program index to a history."""


@dataclass(frozen=True)
class FeatureBatch:
    """One user's candidates at one context time, as columns."""

    catalog: Catalog
    user: int
    programs: np.ndarray
    channels: np.ndarray
    starts: np.ndarray
    context: int
    content_scores: np.ndarray
    wrmf_scores: np.ndarray
    funk_scores: np.ndarray
    cf_known: np.ndarray

    @cached_property
    def daypart(self) -> int:
        """Return the day part of the context time."""
        return int(day_parts(np.array([self.context]))[0])


@dataclass(frozen=True, kw_only=True)
class FeatureDescription:
    """Feature description."""

    key: str
    group: FeatureGroup
    value_fn: Callable[[FeatureBatch, HistoryStats], np.ndarray]


def _user_row(name: str) -> Callable[[FeatureBatch, HistoryStats], np.ndarray]:
    def value(batch: FeatureBatch, stats: HistoryStats) -> np.ndarray:
        return stats.row(getattr(stats, name), batch.user)[batch.programs]

    return value


def _user_share(name: str, column: Callable[[FeatureBatch], np.ndarray]) -> Callable[
    [FeatureBatch, HistoryStats], np.ndarray
]:
    def value(batch: FeatureBatch, stats: HistoryStats) -> np.ndarray:
        if batch.user < 0:
            return np.zeros(len(batch.programs))
        return getattr(stats, name)[batch.user][column(batch)]

    return value


def _time_share(batch: FeatureBatch, stats: HistoryStats) -> np.ndarray:
    user_seconds = stats.row(stats.user_seconds, batch.user)
    total = stats.user_total_seconds[batch.user] if batch.user >= 0 else 0.0
    return user_seconds[batch.programs] / total if total > 0 else np.zeros(len(batch.programs))


def _episodes_remaining(batch: FeatureBatch, stats: HistoryStats) -> np.ndarray:
    watched = stats.row(stats.user_episodes, batch.user)[batch.programs]
    count = batch.catalog.arrays.episode_count[batch.programs]
    return np.where(watched > 0, np.maximum(count - watched, 0.0), 0.0)


def _days_since_last(batch: FeatureBatch, stats: HistoryStats) -> np.ndarray:
    last = stats.row(stats.user_last_watch, batch.user)[batch.programs]
    return np.where(last > 0, np.maximum(batch.context - last, 0) / 86400, 0.0)


def _title_jaccard(batch: FeatureBatch, stats: HistoryStats) -> np.ndarray:
    if batch.user < 0 or not (history := stats.title_tokens[batch.user]):
        return np.zeros(len(batch.programs))
    titles = batch.catalog.arrays.title_tokens
    return np.array(
        [
            len(titles[p] & history) / union if (union := len(titles[p] | history)) else 0.0
            for p in batch.programs
        ]
    )


def _categories(batch: FeatureBatch) -> np.ndarray:
    return batch.catalog.arrays.category[batch.programs]


def _subcategories(batch: FeatureBatch) -> np.ndarray:
    return batch.catalog.arrays.subcategory[batch.programs]


def _daypart_flag(part: DayPart) -> Callable[[FeatureBatch, HistoryStats], np.ndarray]:
    def value(batch: FeatureBatch, _: HistoryStats) -> np.ndarray:
        return np.full(len(batch.programs), float(batch.daypart == part))

    return value


REPETITION_FEATURES = (
    FeatureDescription(
        key="user_program_views",
        group=FeatureGroup.REPETITION,
        value_fn=_user_row("user_views"),
    ),
    FeatureDescription(
        key="user_program_time_share",
        group=FeatureGroup.REPETITION,
        value_fn=_time_share,
    ),
    FeatureDescription(
        key="user_channel_share",
        group=FeatureGroup.REPETITION,
        value_fn=_user_share("channel_share", lambda batch: batch.channels),
    ),
    FeatureDescription(
        key="program_rank_quantile",
        group=FeatureGroup.REPETITION,
        value_fn=lambda batch, stats: stats.rank_quantile[batch.programs],
    ),
    FeatureDescription(
        key="program_audience_share",
        group=FeatureGroup.REPETITION,
        value_fn=lambda batch, stats: stats.program_audience[batch.programs]
        / max(1, stats.active_users),
    ),
    FeatureDescription(
        key="series_episodes_watched",
        group=FeatureGroup.REPETITION,
        value_fn=_user_row("user_episodes"),
    ),
    FeatureDescription(
        key="series_episodes_remaining",
        group=FeatureGroup.REPETITION,
        value_fn=_episodes_remaining,
    ),
)

CATEGORY_FEATURES = (
    FeatureDescription(
        key="user_category_share",
        group=FeatureGroup.CATEGORY,
        value_fn=_user_share("category_share", _categories),
    ),
    FeatureDescription(
        key="user_subcategory_share",
        group=FeatureGroup.CATEGORY,
        value_fn=_user_share("subcategory_share", _subcategories),
    ),
    FeatureDescription(
        key="global_category_share",
        group=FeatureGroup.CATEGORY,
        value_fn=lambda batch, stats: stats.global_category_share[_categories(batch)],
    ),
    FeatureDescription(
        key="global_subcategory_share",
        group=FeatureGroup.CATEGORY,
        value_fn=lambda batch, stats: stats.global_subcategory_share[_subcategories(batch)],
    ),
)

BASE_FEATURES = (
    *REPETITION_FEATURES,
    *CATEGORY_FEATURES,
    FeatureDescription(
        key="broadcast_weekend",
        group=FeatureGroup.TIME,
        value_fn=lambda batch, _: (weekdays(batch.starts) >= 5).astype(np.float64),
    ),
    FeatureDescription(
        key="daypart_morning",
        group=FeatureGroup.TIME,
        value_fn=_daypart_flag(DayPart.MORNING),
    ),
    FeatureDescription(
        key="daypart_afternoon",
        group=FeatureGroup.TIME,
        value_fn=_daypart_flag(DayPart.AFTERNOON),
    ),
    FeatureDescription(
        key="daypart_evening",
        group=FeatureGroup.TIME,
        value_fn=_daypart_flag(DayPart.EVENING),
    ),
    FeatureDescription(
        key="daypart_night",
        group=FeatureGroup.TIME,
        value_fn=_daypart_flag(DayPart.NIGHT),
    ),
    FeatureDescription(
        key="user_daypart_share",
        group=FeatureGroup.TIME,
        value_fn=_user_share(
            "daypart_share", lambda batch: np.full(len(batch.programs), batch.daypart)
        ),
    ),
    FeatureDescription(
        key="hours_since_broadcast",
        group=FeatureGroup.TIME,
        value_fn=lambda batch, _: np.maximum(batch.context - batch.starts, 0) / 3600,
    ),
    FeatureDescription(
        key="days_since_last_episode",
        group=FeatureGroup.TIME,
        value_fn=_days_since_last,
    ),
    FeatureDescription(
        key="title_jaccard",
        group=FeatureGroup.TEXT,
        value_fn=_title_jaccard,
    ),
    FeatureDescription(
        key="tfidf_similarity",
        group=FeatureGroup.TEXT,
        value_fn=lambda batch, _: batch.content_scores,
    ),
    FeatureDescription(
        key="is_series",
        group=FeatureGroup.CHARACTERISTICS,
        value_fn=lambda batch, _: batch.catalog.arrays.is_series[batch.programs],
    ),
    FeatureDescription(
        key="episode_count",
        group=FeatureGroup.CHARACTERISTICS,
        value_fn=lambda batch, _: batch.catalog.arrays.episode_count[batch.programs],
    ),
    FeatureDescription(
        key="content_age_days",
        group=FeatureGroup.CHARACTERISTICS,
        value_fn=lambda batch, _: np.maximum(
            (batch.context - batch.catalog.arrays.first_broadcast[batch.programs]) // 86400, 0
        ).astype(np.float64),
    ),
    FeatureDescription(
        key="duration_minutes",
        group=FeatureGroup.CHARACTERISTICS,
        value_fn=lambda batch, _: batch.catalog.arrays.duration[batch.programs] / 60,
    ),
    FeatureDescription(
        key="wrmf_score",
        group=FeatureGroup.COLLABORATIVE,
        value_fn=lambda batch, _: batch.wrmf_scores,
    ),
    FeatureDescription(
        key="funk_svd_score",
        group=FeatureGroup.COLLABORATIVE,
        value_fn=lambda batch, _: batch.funk_scores,
    ),
    FeatureDescription(
        key="program_seen",
        group=FeatureGroup.PRESENCE,
        value_fn=lambda batch, stats: (stats.program_views[batch.programs] > 0).astype(np.float64),
    ),
    FeatureDescription(
        key="user_seen_program",
        group=FeatureGroup.PRESENCE,
        value_fn=lambda batch, stats: (
            stats.row(stats.user_views, batch.user)[batch.programs] > 0
        ).astype(np.float64),
    ),
    FeatureDescription(
        key="user_active",
        group=FeatureGroup.PRESENCE,
        value_fn=lambda batch, stats: np.full(
            len(batch.programs),
            float(batch.user >= 0 and stats.user_total_seconds[batch.user] > 0),
        ),
    ),
    FeatureDescription(
        key="cf_known",
        group=FeatureGroup.PRESENCE,
        value_fn=lambda batch, _: batch.cf_known.astype(np.float64),
    ),
)


def _recent(description: FeatureDescription, weeks: int) -> FeatureDescription:
    def value(batch: FeatureBatch, stats: HistoryStats) -> np.ndarray:
        return description.value_fn(batch, stats.recent.get(weeks, stats))

    return FeatureDescription(
        key=f"{description.key}_{weeks}w", group=FeatureGroup.RECENCY, value_fn=value
    )


FEATURES = BASE_FEATURES + tuple(
    _recent(description, weeks)
    for weeks in RECENT_WEEKS
    for description in (*REPETITION_FEATURES, *CATEGORY_FEATURES)
)


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered feature names."""

    names: tuple[str, ...]

    def __post_init__(self) -> None:
        """Validate uniqueness."""
        if len(set(self.names)) != len(self.names):
            raise ValueError("Feature names must be unique")

    def __len__(self) -> int:
        """Return the schema length."""
        return len(self.names)

    def index(self, name: str) -> int:
        """Return the position of a feature."""
        return self.names.index(name)

    def dump(self, path: Path | str) -> None:
        """Write the schema as JSON."""
        Path(path).write_text(
            json.dumps({"names": list(self.names), "length": len(self)}, indent=2) + "\n",
            encoding="utf-8",
        )

    @classmethod
    def load(cls, path: Path | str) -> FeatureSchema:
        """Read a schema written by `dump`."""
        return cls(tuple(json.loads(Path(path).read_text(encoding="utf-8"))["names"]))


SCHEMA = FeatureSchema(tuple(description.key for description in FEATURES))
FEATURE_GROUPS = {description.key: description.group for description in FEATURES}


def extract_batch(
    stats: HistoryStats,
    catalog: Catalog,
    user: int,
    airings: Sequence[Airing],
    context: datetime,
    content_scores: np.ndarray | None = None,
    wrmf_scores: np.ndarray | None = None,
    funk_scores: np.ndarray | None = None,
    cf_known: np.ndarray | None = None,
) -> np.ndarray:
    """Return the feature matrix of a user's candidate airings at ``context``.

    Args:
        stats: Window statistics; must end before the context's week.
        catalog: The catalog the airings belong to.
        user: Dense user index, or -1 for a user with no history.
        airings: Candidate airings, one row each.
        context: The session time.
        content_scores: Content-based similarity per candidate.
        wrmf_scores: WRMF score per candidate.
        funk_scores: SGD factorization score per candidate.
        cf_known: Whether both user and candidate have factors.

    Returns:
        A ``len(airings) x len(SCHEMA)`` float matrix.
    """
    n = len(airings)
    zeros = np.zeros(n)
    batch = FeatureBatch(
        catalog=catalog,
        user=user,
        programs=np.array([catalog.program_index[a.program] for a in airings], dtype=np.int64),
        channels=np.array([catalog.channel_index[a.channel] for a in airings], dtype=np.int64),
        starts=np.array([epoch(a.start) for a in airings], dtype=np.int64),
        context=epoch(context),
        content_scores=zeros if content_scores is None else np.asarray(content_scores, float),
        wrmf_scores=zeros if wrmf_scores is None else np.asarray(wrmf_scores, float),
        funk_scores=zeros if funk_scores is None else np.asarray(funk_scores, float),
        cf_known=np.zeros(n, bool) if cf_known is None else np.asarray(cf_known, bool),
    )
    matrix = np.empty((n, len(SCHEMA)))
    for column, description in enumerate(FEATURES):
        matrix[:, column] = description.value_fn(batch, stats)
    if not np.isfinite(matrix).all():
        raise TrainingError(f"user {user}: non-finite feature values at {context}")
    return matrix


def extract(
    stats: HistoryStats,
    catalog: Catalog,
    user: int,
    airing: Airing,
    context: datetime,
    cb_score: float = 0.0,
    cf_scores: tuple[float, float] = (0.0, 0.0),
) -> np.ndarray:
    """Return the feature vector of one <user, program> pair."""
    known = np.array([any(cf_scores)])
    return extract_batch(
        stats,
        catalog,
        user,
        [airing],
        context,
        np.array([cb_score]),
        np.array([cf_scores[0]]),
        np.array([cf_scores[1]]),
        known,
    )[0]


@dataclass
class FeatureExtractor:
    """Window statistics and score sources bound for extraction."""

    stats: HistoryStats
    catalog: Catalog
    user_index: dict[UserId, int]
    content: ContentScorer | None = None
    wrmf: PairScorer | None = None
    funk: PairScorer | None = None
    history_cap: int | None = None

    def user(self, user: UserId) -> int:
        """Return the dense index of a user, -1 if unknown."""
        return self.user_index.get(user, -1)

    def extract_batch(
        self, user: UserId, airings: Sequence[Airing], context: datetime
    ) -> np.ndarray:
        """Return the feature matrix of a user's candidates."""
        index = self.user(user)
        programs = [airing.program for airing in airings]
        program_idx = np.array([self.catalog.program_index[p] for p in programs], dtype=np.int64)
        content = (
            self.content.score_history(self.stats.history_of(index, self.history_cap), program_idx)
            if self.content is not None
            else None
        )
        wrmf = self.wrmf.score(user, programs) if self.wrmf is not None else None
        funk = self.funk.score(user, programs) if self.funk is not None else None
        known = self.wrmf.known(user, programs) if self.wrmf is not None else None
        return extract_batch(
            self.stats, self.catalog, index, airings, context, content, wrmf, funk, known
        )

    def extract(self, user: UserId, airing: Airing, context: datetime) -> np.ndarray:
        """Return the feature vector of one candidate."""
        return self.extract_batch(user, [airing], context)[0]


def build_dataset(
    queries: Sequence[Query], extractor: FeatureExtractor, with_empty: bool = False
) -> RankingDataset:
    """Extract one quadruple per candidate of every query, grouped per query."""
    blocks: list[np.ndarray] = []
    labels: list[np.ndarray] = []
    qids: list[int] = []
    users: list[int] = []
    programs: list[np.ndarray] = []
    for query in queries:
        if not query.candidates or (not query.truth and not with_empty):
            continue
        blocks.append(extractor.extract_batch(query.user, query.candidates, query.time))
        ids = np.array(query.program_ids, dtype=np.int64)
        labels.append(np.isin(ids, list(query.truth)).astype(np.int64))
        programs.append(ids)
        qids.append(query.qid)
        users.append(query.user)
    return RankingDataset.from_queries(qids, users, programs, blocks, labels, SCHEMA.names)


def quadruples(dataset: RankingDataset) -> list[Quadruple]:
    """Return the rows of a ranking dataset as quadruples."""
    return [
        Quadruple(int(user), int(program), int(label), row)
        for user, program, label, row in zip(
            dataset.row_users, dataset.programs, dataset.labels, dataset.features, strict=True
        )
    ]


def export_dataset(dataset: RankingDataset, directory: Path | str) -> Path:
    """Write a ranking dataset in SVMlight format with its ``schema.json``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / DATASET_FILE
    dump_svmlight_file(
        dataset.features,
        dataset.labels,
        path,
        zero_based=False,
        query_id=dataset.row_qids,
        comment=f"features: {len(dataset.names)}",
    )
    FeatureSchema(dataset.names).dump(directory / SCHEMA_FILE)
    _LOGGER.info("%s: Exported %s quadruples in %s queries", path, len(dataset), dataset.n_queries)
    return path


@dataclass
class FunkSvd:
    """Plain SGD matrix factorization on binary preferences."""

    factors: int = FUNK_FACTORS
    learning_rate: float = FUNK_LEARNING_RATE
    regularization: float = FUNK_REGULARIZATION
    epochs: int = FUNK_EPOCHS
    seed: int = 0
    user_ids: dict[UserId, int] = field(default_factory=dict, repr=False)
    item_ids: dict[ProgramId, int] = field(default_factory=dict, repr=False)
    user_factors: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)), repr=False)
    item_factors: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)), repr=False)

    def fit(self, users: np.ndarray, items: np.ndarray, labels: np.ndarray) -> FunkSvd:
        """Fit factors to (user, program, preference) triples."""
        if self.factors < 1 or self.learning_rate <= 0 or self.regularization < 0:
            raise TrainingError(f"Invalid FunkSVD parameters: {self}")
        self.user_ids = {int(u): i for i, u in enumerate(np.unique(users))}
        self.item_ids = {int(p): i for i, p in enumerate(np.unique(items))}
        rng = np.random.default_rng(self.seed)
        self.user_factors = rng.normal(0, 0.1, (len(self.user_ids), self.factors))
        self.item_factors = rng.normal(0, 0.1, (len(self.item_ids), self.factors))
        rows = np.array([self.user_ids[int(u)] for u in users], dtype=np.int64)
        cols = np.array([self.item_ids[int(p)] for p in items], dtype=np.int64)
        targets = np.asarray(labels, dtype=np.float64)
        for epoch_no in range(self.epochs):
            total = 0.0
            for index in rng.permutation(len(targets)):
                u, i = rows[index], cols[index]
                user_vec, item_vec = self.user_factors[u], self.item_factors[i]
                error = targets[index] - user_vec @ item_vec
                total += error * error
                self.user_factors[u] = user_vec + self.learning_rate * (
                    error * item_vec - self.regularization * user_vec
                )
                self.item_factors[i] = item_vec + self.learning_rate * (
                    error * user_vec - self.regularization * item_vec
                )
            if not np.isfinite(total):
                raise TrainingError(f"FunkSVD diverged at epoch {epoch_no}")
            _LOGGER.debug("FunkSVD epoch %s: squared error %.6f", epoch_no, total)
        return self

    def known(self, user: UserId, programs: Sequence[ProgramId]) -> np.ndarray:
        """Return whether the user and each program have factors."""
        if user not in self.user_ids:
            return np.zeros(len(programs), bool)
        return np.array([p in self.item_ids for p in programs], bool)

    def score(self, user: UserId, programs: Sequence[ProgramId]) -> np.ndarray:
        """Return the predicted preference, 0 for unknown ids."""
        scores = np.zeros(len(programs))
        if (row := self.user_ids.get(user)) is None:
            return scores
        for position, program in enumerate(programs):
            if (col := self.item_ids.get(program)) is not None:
                scores[position] = self.user_factors[row] @ self.item_factors[col]
        return scores

    def as_dict(self) -> dict[str, Any]:
        """Return a JSON-serializable model."""
        return {
            "params": {
                "factors": self.factors,
                "learning_rate": self.learning_rate,
                "regularization": self.regularization,
                "epochs": self.epochs,
                "seed": self.seed,
            },
            "users": list(self.user_ids),
            "items": list(self.item_ids),
            "user_factors": self.user_factors.tolist(),
            "item_factors": self.item_factors.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> FunkSvd:
        """Rebuild a model from `as_dict` output."""
        model = cls(**data["params"])
        model.user_ids = {int(u): i for i, u in enumerate(data["users"])}
        model.item_ids = {int(p): i for i, p in enumerate(data["items"])}
        model.user_factors = np.array(data["user_factors"], dtype=np.float64).reshape(
            len(model.user_ids), model.factors
        )
        model.item_factors = np.array(data["item_factors"], dtype=np.float64).reshape(
            len(model.item_ids), model.factors
        )
        return model


def preference_triples(daily: DailyViews) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return (user, program, max preference) per watched pair of a window."""
    if not len(daily):
        return daily.user, daily.program, daily.preference
    # Ids are opaque and may use the full int64 range
    pairs = np.column_stack([daily.user, daily.program])
    unique, first, inverse = np.unique(pairs, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.reshape(-1)
    labels = np.zeros(len(unique), dtype=np.int64)
    np.maximum.at(labels, inverse, daily.preference)
    return daily.user[first], daily.program[first], labels
