"""tvrank evaluation: sliding-window folds, candidate sets and cross-validated scoring."""

from __future__ import annotations

from collections import defaultdict
from collections.abc import Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
import csv
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta
import logging
from pathlib import Path
from typing import Any

import numpy as np

from .const import (
    ALGORITHM_LABELS,
    DEFAULT_K_VALUES,
    DEFAULT_MAX_SESSIONS_PER_USER,
    DEFAULT_OBJECTIVE,
    DEFAULT_SEED,
    DEFAULT_TRAIN_NEGATIVES,
    FOLD_WEEKS,
    HISTORY_WEEKS,
    SESSION_GAP,
    AccuracySource,
    Algorithm,
    FeedbackSource,
    ScenarioKind,
    ViewMode,
)
from .domain import (
    Airing,
    FractionAtLeast,
    PreferenceRule,
    ProgramId,
    Query,
    UserId,
    ViewEvent,
    parse_rule,
    preference_label,
)
from .exceptions import ConfigError, TvRankError
from .features import (
    FeatureExtractor,
    FunkSvd,
    HistoryStats,
    build_dataset,
    build_stats,
    preference_triples,
)
from .helpers import derive_seed, week_start
from .ingestion import Catalog, Dataset, DailyViews
from .ltr import GbmModel, LambdaMartParams, RankingDataset, fit_with_holdout
from .metrics import (
    METRIC_LABELS,
    HistoryProfile,
    ListedProgram,
    Metric,
    dcg_at_k,
    ild_at_k,
    msi_at_k,
    ndcg_at_k,
    unexpectedness_at_k,
)
from .recommenders import (
    ContentBasedRecommender,
    ModelRecommender,
    PopularRecommender,
    RandomRecommender,
    Recommender,
    ScoredList,
    TfIdfIndex,
    UserPopularRecommender,
    build_tfidf,
)
from .rerank import ObjectiveSpec, RerankContext, greedy_rec, objective_eval
from .wrmf import MfModel, WrmfParams, fit_window

_LOGGER = logging.getLogger(__name__)

REPORT_COLUMNS = ("algorithm", "scenario", "metric", "k", "value")

# seed purposes
_SEED_SESSIONS = 0
_SEED_WRMF = 1
_SEED_FUNK = 2
_SEED_RANKER = 3
_SEED_RANDOM = 4


@dataclass(frozen=True)
class FoldSpec:
    """Feature-history weeks, then a training-label week, then a target week."""

    history_weeks: tuple[int, ...]
    train_label_week: int
    target_week: int

    def __post_init__(self) -> None:
        """Validate that the weeks are consecutive."""
        weeks = (*self.history_weeks, self.train_label_week, self.target_week)
        pairs = zip(weeks, weeks[1:], strict=False)
        if not self.history_weeks or any(b != a + 1 for a, b in pairs):
            raise ValueError(f"Invalid fold: weeks {weeks} must be consecutive")

    @property
    def target_history_weeks(self) -> tuple[int, ...]:
        """Return the feature-history weeks used when scoring the target week."""
        return (*self.history_weeks[1:], self.train_label_week)

    def __str__(self) -> str:
        """Return the 1-based week span."""
        return f"weeks {self.history_weeks[0] + 1}-{self.target_week + 1}"


def make_folds(total_weeks: int = 10, history_weeks: int = HISTORY_WEEKS) -> list[FoldSpec]:
    """Return the folds of a sliding window advancing one week at a time."""
    span = history_weeks + FOLD_WEEKS - HISTORY_WEEKS
    if total_weeks < span:
        raise ValueError(f"Invalid total weeks: {total_weeks} (must be >= {span})")
    return [
        FoldSpec(
            tuple(range(first, first + history_weeks)),
            first + history_weeks,
            first + span - 1,
        )
        for first in range(total_weeks - span + 1)
    ]


def fold_specs(total_weeks: int) -> list[FoldSpec]:
    """Return the folds of a dataset, rejecting one too short for a single fold."""
    try:
        return make_folds(total_weeks)
    except ValueError as ex:
        raise ConfigError(f"Dataset spans {total_weeks} week(s): {ex}") from ex


@dataclass(frozen=True)
class Scenario:
    """A candidate-set kind evaluated with a feedback source and preference rule."""

    kind: ScenarioKind
    feedback: FeedbackSource = FeedbackSource.LIVE_AND_CATCHUP
    rule: PreferenceRule = field(default_factory=FractionAtLeast)

    def __post_init__(self) -> None:
        """Reject live evaluation without live feedback."""
        if self.kind is ScenarioKind.LIVE_TV and self.feedback is FeedbackSource.CATCHUP_ONLY:
            raise ConfigError("Live TV evaluation needs live feedback (use live+catchup)")

    @property
    def mode(self) -> ViewMode:
        """Return the view mode whose sessions are evaluated."""
        return ViewMode.LIVE if self.kind is ScenarioKind.LIVE_TV else ViewMode.CATCHUP

    @property
    def name(self) -> str:
        """Return the scenario label used in reports."""
        name = f"{self.kind}/{self.feedback}"
        if self.rule != FractionAtLeast():
            name += f"/{self.rule}"
        return name

    @classmethod
    def parse(cls, name: str) -> Scenario:
        """Parse a label produced by `name`."""
        try:
            kind, feedback, *rule = name.split("/")
            return cls(
                ScenarioKind(kind),
                FeedbackSource(feedback),
                parse_rule(rule[0]) if rule else FractionAtLeast(),
            )
        except ValueError as ex:
            raise ConfigError(f"Invalid scenario: {name!r}") from ex


@dataclass(frozen=True)
class Session:
    """A maximal run of one user's views with gaps under the session gap."""

    user: UserId
    events: tuple[ViewEvent, ...]

    @property
    def start(self) -> datetime:
        """Return the start of the first view."""
        return self.events[0].watch_start


def sessions(events: Iterable[ViewEvent], gap: timedelta = SESSION_GAP) -> list[Session]:
    """Split (user, watch_start)-ordered events into sessions."""
    found: list[Session] = []
    current: list[ViewEvent] = []
    last_end: datetime | None = None
    for event in events:
        if current and (
            event.user != current[0].user or last_end is None or event.watch_start - last_end >= gap
        ):
            found.append(Session(current[0].user, tuple(current)))
            current = []
        current.append(event)
        end = event.watch_start + timedelta(seconds=event.watched_seconds)
        last_end = end if len(current) == 1 or last_end is None else max(last_end, end)
    if current:
        found.append(Session(current[0].user, tuple(current)))
    return found


def watched_programs(
    events: Iterable[ViewEvent], catalog: Catalog, rule: PreferenceRule
) -> frozenset[ProgramId]:
    """Return the programs whose summed views satisfy the preference rule."""
    seconds: dict[ProgramId, float] = defaultdict(float)
    for event in events:
        seconds[event.program] += event.watched_seconds
    return frozenset(
        program_id
        for program_id, total in seconds.items()
        if preference_label(min(1.0, total / catalog.programs[program_id].duration), total, rule)
    )


def live_candidates(user: UserId, moment: datetime, catalog: Catalog) -> list[Airing]:
    """Return the programs being broadcast at ``moment``."""
    del user
    return catalog.live_candidates(moment)


def catchup_candidates(user: UserId, moment: datetime, catalog: Catalog) -> list[Airing]:
    """Return the programs broadcast during the catch-up window before ``moment``."""
    del user
    return catalog.catchup_candidates(moment)


CANDIDATES = {
    ScenarioKind.LIVE_TV: live_candidates,
    ScenarioKind.CATCH_UP: catchup_candidates,
}


@dataclass
class QueryCounts:
    """Bookkeeping of query construction."""

    sessions: int = 0
    no_candidates: int = 0
    empty_truth: int = 0


def build_queries(
    dataset: Dataset,
    week: int,
    scenario: Scenario,
    seed: int,
    *,
    feedback: FeedbackSource = FeedbackSource.LIVE_AND_CATCHUP,
    max_sessions: int | None = DEFAULT_MAX_SESSIONS_PER_USER,
    negatives: int | None = None,
    weekly: bool = False,
    qid_start: int = 0,
) -> tuple[list[Query], QueryCounts]:
    """Return one ranking query per sampled session of a week.

    Sessions come from the week's views in the scenario's mode, limited to
    ``feedback``. Truth is the candidates the session watched per the rule.
    With ``weekly`` each user gets a single query at the end of the week over
    everything aired that week. ``negatives`` subsamples non-watched candidates.
    """
    catalog = dataset.catalog
    start = week_start(week, dataset.origin)
    end = start + timedelta(weeks=1)
    log = dataset.log.filter(feedback)
    events = [
        event
        for event in log.events
        if start <= event.watch_start < end and event.mode is scenario.mode
    ]
    rng = np.random.default_rng(seed)
    counts = QueryCounts()
    queries: list[Query] = []

    if weekly:
        grouped: dict[UserId, list[ViewEvent]] = defaultdict(list)
        for event in events:
            grouped[event.user].append(event)
        aired = tuple(catalog.aired_between(start, end))
        picked = [(end, user, tuple(user_events)) for user, user_events in grouped.items()]
    else:
        by_user: dict[UserId, list[Session]] = defaultdict(list)
        for session in sessions(events):
            by_user[session.user].append(session)
        picked = []
        for user in sorted(by_user):
            user_sessions = by_user[user]
            if max_sessions is not None and len(user_sessions) > max_sessions:
                keep = np.sort(rng.choice(len(user_sessions), max_sessions, replace=False))
                user_sessions = [user_sessions[index] for index in keep]
            picked.extend((session.start, user, session.events) for session in user_sessions)
        aired = ()

    for time, user, session_events in picked:
        counts.sessions += 1
        candidates = (
            aired if weekly else tuple(CANDIDATES[scenario.kind](user, time, catalog))
        )
        if not candidates:
            counts.no_candidates += 1
            continue
        offered = {airing.program for airing in candidates}
        truth = watched_programs(session_events, catalog, scenario.rule) & offered
        if not truth:
            counts.empty_truth += 1
        if negatives is not None and len(candidates) - len(truth) > negatives:
            others = [index for index, a in enumerate(candidates) if a.program not in truth]
            keep = set(rng.choice(others, negatives, replace=False).tolist())
            candidates = tuple(
                a for index, a in enumerate(candidates) if a.program in truth or index in keep
            )
        queries.append(Query(qid_start + len(queries), user, time, candidates, truth))

    if counts.no_candidates:
        _LOGGER.warning(
            "week %s %s: Skipped %s of %s session(s) without candidates",
            week,
            scenario.name,
            counts.no_candidates,
            counts.sessions,
        )
    return queries, counts


@dataclass(frozen=True)
class EvaluationSettings:
    """Everything a cross-validated run needs besides the data."""

    algorithms: tuple[Algorithm, ...] = tuple(Algorithm)
    k_values: tuple[int, ...] = DEFAULT_K_VALUES
    objective: tuple[float, float, float, float] = DEFAULT_OBJECTIVE
    rerank_pool: int | None = None
    weekly_reference: bool = False
    ndcg_empty_as_zero: bool = False
    max_sessions_per_user: int | None = DEFAULT_MAX_SESSIONS_PER_USER
    train_negatives: int | None = DEFAULT_TRAIN_NEGATIVES
    history_cap: int | None = None
    folds: int | None = None
    workers: int = 1
    seed: int = DEFAULT_SEED
    wrmf: WrmfParams = field(default_factory=WrmfParams)
    funk_svd: dict[str, Any] = field(default_factory=dict)
    lambdamart: LambdaMartParams = field(default_factory=LambdaMartParams)

    def __post_init__(self) -> None:
        """Validate list sizes."""
        if not self.k_values or min(self.k_values) < 1:
            raise ConfigError(f"Invalid k values: {self.k_values} (must be >= 1)")
        if self.workers < 1:
            raise ConfigError(f"Invalid workers: {self.workers} (must be >= 1)")
        try:
            ObjectiveSpec(self.objective, max(self.k_values))
        except ValueError as ex:
            raise ConfigError(str(ex)) from ex

    def objective_spec(self, k: int, source: AccuracySource) -> ObjectiveSpec:
        """Return the objective for a list size."""
        return ObjectiveSpec(self.objective, k, source)


@dataclass
class WindowModels:
    """Statistics and factorization models of one feature window."""

    stats: HistoryStats
    wrmf: MfModel | None
    funk: FunkSvd | None


def train_window(
    dataset: Dataset,
    daily: DailyViews,
    weeks: Sequence[int],
    settings: EvaluationSettings,
    seed_path: Sequence[int],
) -> WindowModels:
    """Build the statistics and fit WRMF and FunkSVD on a window."""
    first, last = weeks[0], weeks[-1]
    stats = build_stats(daily, dataset.catalog, len(dataset.users), first, last)
    window = daily.in_weeks(first, last)
    if not (window.preference == 1).any():
        _LOGGER.warning("weeks %s-%s: No positive views, collaborative models skipped", first, last)
        return WindowModels(stats, None, None)
    wrmf = fit_window(
        window, replace(settings.wrmf, seed=derive_seed(settings.seed, *seed_path, _SEED_WRMF))
    )
    funk = FunkSvd(**settings.funk_svd, seed=derive_seed(settings.seed, *seed_path, _SEED_FUNK))
    funk.fit(*preference_triples(window))
    return WindowModels(stats, wrmf, funk)


@dataclass
class FoldModels:
    """Everything trained for one fold and scenario."""

    fold: FoldSpec
    scenario: Scenario
    train: WindowModels
    target: WindowModels
    tfidf: TfIdfIndex
    train_dataset: RankingDataset
    ranker: GbmModel
    train_counts: QueryCounts

    def extractor(
        self, dataset: Dataset, window: WindowModels, cap: int | None
    ) -> FeatureExtractor:
        """Return a feature extractor over a window."""
        return FeatureExtractor(
            stats=window.stats,
            catalog=dataset.catalog,
            user_index=dataset.user_index,
            content=self.tfidf,
            wrmf=window.wrmf,
            funk=window.funk,
            history_cap=cap,
        )


class FoldCache:
    """Window models shared by the scenarios of one fold."""

    def __init__(self, dataset: Dataset, fold: FoldSpec, settings: EvaluationSettings) -> None:
        """Initialize the cache."""
        self.dataset = dataset
        self.fold = fold
        self.settings = settings
        self._windows: dict[tuple[str, FeedbackSource, bool], WindowModels] = {}
        self._tfidf: TfIdfIndex | None = None

    @property
    def tfidf(self) -> TfIdfIndex:
        """Return the catalog TF-IDF index."""
        if self._tfidf is None:
            self._tfidf = build_tfidf(self.dataset.catalog)
        return self._tfidf

    def window(self, scenario: Scenario, target: bool) -> WindowModels:
        """Return the training or target window models for a scenario's feedback."""
        key = (str(scenario.rule), scenario.feedback, target)
        if key not in self._windows:
            weeks = self.fold.target_history_weeks if target else self.fold.history_weeks
            daily = self.dataset.daily(scenario.rule, scenario.feedback)
            self._windows[key] = train_window(
                self.dataset,
                daily,
                weeks,
                self.settings,
                (self.fold.target_week, int(target)),
            )
        return self._windows[key]


def train_models(
    dataset: Dataset,
    fold: FoldSpec,
    scenario: Scenario,
    settings: EvaluationSettings,
    cache: FoldCache | None = None,
) -> FoldModels:
    """Fit every model of a fold on its history and training-label weeks."""
    cache = cache or FoldCache(dataset, fold, settings)
    train = cache.window(scenario, target=False)
    queries, counts = build_queries(
        dataset,
        fold.train_label_week,
        scenario,
        derive_seed(settings.seed, fold.target_week, _SEED_SESSIONS, 0),
        feedback=scenario.feedback,
        max_sessions=settings.max_sessions_per_user,
        negatives=settings.train_negatives if scenario.kind is ScenarioKind.CATCH_UP else None,
    )
    extractor = FeatureExtractor(
        stats=train.stats,
        catalog=dataset.catalog,
        user_index=dataset.user_index,
        content=cache.tfidf,
        wrmf=train.wrmf,
        funk=train.funk,
        history_cap=settings.history_cap,
    )
    train_dataset = build_dataset(queries, extractor)
    params = replace(
        settings.lambdamart, seed=derive_seed(settings.seed, fold.target_week, _SEED_RANKER)
    )
    if train_dataset.n_queries:
        ranker = fit_with_holdout(train_dataset, params)
    else:
        _LOGGER.warning("%s %s: No training queries, ranker is constant", fold, scenario.name)
        ranker = GbmModel(n_features=train_dataset.features.shape[1], params=params)
    return FoldModels(
        fold=fold,
        scenario=scenario,
        train=train,
        target=cache.window(scenario, target=True),
        tfidf=cache.tfidf,
        train_dataset=train_dataset,
        ranker=ranker,
        train_counts=counts,
    )


type MetricKey = tuple[Algorithm, Metric, int]


@dataclass
class FoldResult:
    """Metric averages of one fold and scenario."""

    fold: FoldSpec
    scenario: Scenario
    values: dict[MetricKey, float]
    queries: int
    users: int


class _Collector:
    """Per-user lists of per-session metric values."""

    def __init__(self) -> None:
        self.values: dict[MetricKey, dict[UserId, list[float]]] = defaultdict(
            lambda: defaultdict(list)
        )

    def add(self, key: MetricKey, user: UserId, value: float | None) -> None:
        if value is not None:
            self.values[key][user].append(value)

    def averages(self) -> dict[MetricKey, float]:
        """Return means over sessions, then over users."""
        return {
            key: float(np.mean([np.mean(values) for values in per_user.values()]))
            for key, per_user in self.values.items()
        }


def _history_profile(stats: HistoryStats, catalog: Catalog, user: int) -> HistoryProfile:
    if user < 0:
        return HistoryProfile.of([])
    listed = []
    for program_idx, channel_idx in zip(
        stats.history[user].tolist(), stats.history_channels[user].tolist(), strict=True
    ):
        program = catalog.programs[int(catalog.program_ids[program_idx])]
        listed.append(
            ListedProgram(
                program.id,
                program.category,
                program.subcategory,
                int(catalog.channel_ids[channel_idx]),
            )
        )
    return HistoryProfile.of(listed)


def _seen_before(dataset: Dataset, rule: PreferenceRule, week: int) -> dict[UserId, set[ProgramId]]:
    daily = dataset.daily(rule, FeedbackSource.LIVE_AND_CATCHUP)
    mask = daily.week < week
    seen: dict[UserId, set[ProgramId]] = defaultdict(set)
    users, programs = daily.user[mask].tolist(), daily.program[mask].tolist()
    for user, program_id in zip(users, programs, strict=True):
        seen[user].add(program_id)
    return seen


def evaluate_run(
    dataset: Dataset,
    fold: FoldSpec,
    scenario: Scenario,
    settings: EvaluationSettings,
    models: FoldModels | None = None,
    cache: FoldCache | None = None,
) -> FoldResult:
    """Score every algorithm on the target week of a fold."""
    models = models or train_models(dataset, fold, scenario, settings, cache)
    catalog = dataset.catalog
    target = models.target
    queries, counts = build_queries(
        dataset,
        fold.target_week,
        scenario,
        derive_seed(settings.seed, fold.target_week, _SEED_SESSIONS, 1),
        max_sessions=settings.max_sessions_per_user,
        weekly=settings.weekly_reference and scenario.kind is ScenarioKind.CATCH_UP,
    )
    extractor = models.extractor(dataset, target, settings.history_cap)
    recommenders: dict[Algorithm, Recommender] = {
        Algorithm.RANDOM: RandomRecommender(
            catalog, derive_seed(settings.seed, fold.target_week, _SEED_RANDOM)
        ),
        Algorithm.POPULAR: PopularRecommender(catalog, target.stats),
        Algorithm.USER_POPULAR: UserPopularRecommender(catalog, target.stats, dataset.user_index),
        Algorithm.CONTENT_BASED: ContentBasedRecommender(
            catalog, target.stats, models.tfidf, dataset.user_index, settings.history_cap
        ),
    }
    if target.wrmf is not None:
        recommenders[Algorithm.WRMF] = ModelRecommender(catalog, target.wrmf, "WRMF")
    seen = _seen_before(dataset, scenario.rule, fold.target_week)
    n_users = len(dataset.users)
    collector = _Collector()
    evaluated = 0

    for query in queries:
        if not query.truth and not settings.ndcg_empty_as_zero:
            continue
        evaluated += 1
        user = dataset.user_index.get(query.user, -1)
        listed = {a.program: ListedProgram.of(catalog, a) for a in query.candidates}
        audience = {
            p: float(target.stats.program_audience[catalog.program_index[p]]) for p in listed
        }
        profile = _history_profile(target.stats, catalog, user)
        new_truth = query.truth - seen.get(query.user, set())

        rankings: dict[Algorithm, Any] = {}
        for algorithm in settings.algorithms:
            if algorithm in recommenders:
                rankings[algorithm] = recommenders[algorithm].rank(query, scenario.kind)
        needs_ranker = {Algorithm.L2R, Algorithm.GREEDY_REC} & set(settings.algorithms)
        l2r: ScoredList | None = None
        if needs_ranker:
            features = extractor.extract_batch(query.user, query.candidates, query.time)
            l2r = ScoredList.build(
                query.program_ids, models.ranker.predict(features), query.user, query.time
            )
            if Algorithm.L2R in settings.algorithms:
                rankings[Algorithm.L2R] = l2r
        context = RerankContext.of(
            l2r or ScoredList(()), listed, audience, n_users, profile, query.truth
        )

        for k in settings.k_values:
            truth_spec = settings.objective_spec(k, AccuracySource.GROUND_TRUTH)
            for algorithm in settings.algorithms:
                if algorithm is Algorithm.GREEDY_REC:
                    ranked = greedy_rec(
                        l2r,
                        settings.objective_spec(k, AccuracySource.MODEL_SCORE),
                        context,
                        settings.rerank_pool,
                    )
                elif algorithm in rankings:
                    ranked = rankings[algorithm].top(k)
                else:
                    continue
                top = ranked[:k]
                items = [listed[p] for p in top]
                ndcg = ndcg_at_k(top, query.truth, k)
                collector.add(
                    (algorithm, Metric.NDCG, k), query.user, 0.0 if ndcg is None else ndcg
                )
                collector.add((algorithm, Metric.ILD, k), query.user, ild_at_k(items, k))
                collector.add(
                    (algorithm, Metric.MSI, k), query.user, msi_at_k(top, audience, k, n_users)
                )
                collector.add(
                    (algorithm, Metric.UNEXPECTEDNESS, k),
                    query.user,
                    unexpectedness_at_k(items, profile, k),
                )
                if new_truth:
                    relevance = [1.0 if p in new_truth else 0.0 for p in top]
                    ideal = dcg_at_k([1.0] * min(k, len(new_truth)), k)
                    collector.add(
                        (algorithm, Metric.ACCURACY_NEW, k),
                        query.user,
                        dcg_at_k(relevance, k) / ideal,
                    )
                collector.add(
                    (algorithm, Metric.OBJECTIVE, k),
                    query.user,
                    objective_eval(top, truth_spec, context) if top else 0.0,
                )

    values = collector.averages()
    users = len({query.user for query in queries if query.truth or settings.ndcg_empty_as_zero})
    _LOGGER.info(
        "%s %s: Evaluated %s of %s session(s) from %s user(s)",
        fold,
        scenario.name,
        evaluated,
        counts.sessions,
        users,
    )
    return FoldResult(fold, scenario, values, evaluated, users)


def evaluate_fold(
    dataset: Dataset, fold: FoldSpec, scenarios: Sequence[Scenario], settings: EvaluationSettings
) -> list[FoldResult]:
    """Evaluate every scenario of one fold, sharing window models."""
    cache = FoldCache(dataset, fold, settings)
    return [evaluate_run(dataset, fold, scenario, settings, cache=cache) for scenario in scenarios]


@dataclass(frozen=True)
class ReportRow:
    """One averaged metric."""

    algorithm: str
    scenario: str
    metric: str
    k: int
    value: float


@dataclass(frozen=True)
class Report:
    """Fold-averaged metrics of a cross-validated run."""

    rows: tuple[ReportRow, ...]

    def value(self, algorithm: Algorithm, scenario: str, metric: Metric, k: int) -> float:
        """Return one reported value."""
        for row in self.rows:
            if (row.algorithm, row.scenario, row.metric, row.k) == (
                algorithm.value,
                scenario,
                metric.value,
                k,
            ):
                return row.value
        raise KeyError((algorithm, scenario, metric, k))

    @property
    def scenarios(self) -> list[str]:
        """Return the scenarios in report order."""
        return list(dict.fromkeys(row.scenario for row in self.rows))

    def write_csv(self, path: Path | str) -> None:
        """Write ``algorithm,scenario,metric,k,value`` rows."""
        with Path(path).open("w", newline="", encoding="utf-8") as file:
            writer = csv.writer(file, lineterminator="\n")
            writer.writerow(REPORT_COLUMNS)
            for row in self.rows:
                writer.writerow(
                    (row.algorithm, row.scenario, row.metric, row.k, f"{row.value:.6f}")
                )

    @classmethod
    def read_csv(cls, path: Path | str) -> Report:
        """Read a report written by `write_csv`."""
        with Path(path).open(newline="", encoding="utf-8") as file:
            reader = csv.DictReader(file)
            if tuple(reader.fieldnames or ()) != REPORT_COLUMNS:
                raise TvRankError(f"{path}: not a report file")
            return cls(
                tuple(
                    ReportRow(
                        r["algorithm"], r["scenario"], r["metric"], int(r["k"]), float(r["value"])
                    )
                    for r in reader
                )
            )

    def render(self) -> str:
        """Return one text table per scenario in the published column order."""
        k_values = sorted({row.k for row in self.rows})
        lookup = {(r.algorithm, r.scenario, r.metric, r.k): r.value for r in self.rows}
        header = ["Algorithm"] + [
            f"{METRIC_LABELS[metric]} @{k}" for metric in Metric for k in k_values
        ]
        widths = [max(14, len(title)) for title in header]
        tables = []
        for scenario in self.scenarios:
            heading = "  ".join(t.ljust(w) for t, w in zip(header, widths, strict=True))
            lines = [f"== {scenario} ==", heading]
            algorithms = dict.fromkeys(r.algorithm for r in self.rows if r.scenario == scenario)
            for algorithm in algorithms:
                cells = [ALGORITHM_LABELS[Algorithm(algorithm)]] + [
                    f"{lookup[key]:.3f}"
                    if (key := (algorithm, scenario, metric.value, k)) in lookup
                    else "-"
                    for metric in Metric
                    for k in k_values
                ]
                lines.append("  ".join(c.ljust(w) for c, w in zip(cells, widths, strict=True)))
            tables.append("\n".join(lines))
        return "\n\n".join(tables) + "\n"


def merge_results(results: Iterable[FoldResult], settings: EvaluationSettings) -> Report:
    """Average fold results per scenario, algorithm, metric and k."""
    grouped: dict[tuple[str, MetricKey], list[float]] = defaultdict(list)
    scenarios: dict[str, None] = {}
    for result in results:
        scenarios[result.scenario.name] = None
        for key, value in result.values.items():
            grouped[(result.scenario.name, key)].append(value)
    rows = [
        ReportRow(algorithm.value, scenario, metric.value, k, float(np.mean(values)))
        for scenario in scenarios
        for algorithm in settings.algorithms
        for metric in Metric
        for k in settings.k_values
        if (values := grouped.get((scenario, (algorithm, metric, k))))
    ]
    return Report(tuple(rows))


def cross_validate(
    dataset: Dataset, scenarios: Sequence[Scenario], settings: EvaluationSettings
) -> Report:
    """Evaluate every scenario on every fold and average the folds."""
    folds = fold_specs(dataset.n_weeks)
    if settings.folds is not None:
        folds = folds[: settings.folds]
    _LOGGER.info(
        "Cross-validating %s scenario(s) on %s fold(s) with %s worker(s)",
        len(scenarios),
        len(folds),
        settings.workers,
    )
    if settings.workers > 1:
        with ProcessPoolExecutor(max_workers=settings.workers) as executor:
            per_fold = list(
                executor.map(
                    evaluate_fold,
                    [dataset] * len(folds),
                    folds,
                    [scenarios] * len(folds),
                    [settings] * len(folds),
                )
            )
    else:
        per_fold = [evaluate_fold(dataset, fold, scenarios, settings) for fold in folds]
    return merge_results((result for results in per_fold for result in results), settings)


def rerank_lists(
    dataset: Dataset,
    fold: FoldSpec,
    scenario: Scenario,
    settings: EvaluationSettings,
    models: FoldModels | None = None,
) -> list[dict[str, Any]]:
    """Return the ranker's and GreedyRec's top lists for every target-week query."""
    models = models or train_models(dataset, fold, scenario, settings)
    catalog = dataset.catalog
    queries, _ = build_queries(
        dataset,
        fold.target_week,
        scenario,
        derive_seed(settings.seed, fold.target_week, _SEED_SESSIONS, 1),
        max_sessions=settings.max_sessions_per_user,
        weekly=settings.weekly_reference and scenario.kind is ScenarioKind.CATCH_UP,
    )
    extractor = models.extractor(dataset, models.target, settings.history_cap)
    k = max(settings.k_values)
    spec = settings.objective_spec(k, AccuracySource.MODEL_SCORE)
    lists = []
    for query in queries:
        user = dataset.user_index.get(query.user, -1)
        listed = {a.program: ListedProgram.of(catalog, a) for a in query.candidates}
        audience = {
            p: float(models.target.stats.program_audience[catalog.program_index[p]]) for p in listed
        }
        features = extractor.extract_batch(query.user, query.candidates, query.time)
        l2r = ScoredList.build(query.program_ids, models.ranker.predict(features))
        context = RerankContext.of(
            l2r,
            listed,
            audience,
            len(dataset.users),
            _history_profile(models.target.stats, catalog, user),
            query.truth,
        )
        greedy = greedy_rec(l2r, spec, context, settings.rerank_pool)
        lists.append(
            {
                "qid": query.qid,
                "user": query.user,
                "time": query.time.isoformat().replace("+00:00", "Z"),
                "l2r": l2r.top(k),
                "greedy_rec": greedy,
                "objective": round(objective_eval(greedy, spec, context), 6) if greedy else 0.0,
            }
        )
    return lists
