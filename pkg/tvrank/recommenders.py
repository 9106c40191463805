"""tvrank recommenders: the scorer contract and the baseline algorithms."""

from __future__ import annotations

from abc import ABC, abstractmethod
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass
from datetime import datetime
import logging

import numpy as np
from scipy import sparse
from sklearn.feature_extraction.text import CountVectorizer
from sklearn.preprocessing import normalize

from .const import ScenarioKind
from .domain import Program, ProgramId, Query, UserId
from .features import HistoryStats, PairScorer
from .helpers import name_tokens, tokenize
from .ingestion import Catalog

_LOGGER = logging.getLogger(__name__)

TEXT_FIELDS: dict[str, Callable[[Program], list[str]]] = {
    "title": lambda program: tokenize(program.title),
    "description": lambda program: tokenize(program.description),
    "actors": lambda program: name_tokens(program.actors),
    "directors": lambda program: name_tokens(program.directors),
}


@dataclass(frozen=True)
class ScoredList:
    """Programs ordered by descending score, ties by ascending id."""

    entries: tuple[tuple[ProgramId, float], ...]
    user: UserId | None = None
    time: datetime | None = None
    scenario: ScenarioKind | None = None

    def __post_init__(self) -> None:
        """Validate ordering and uniqueness."""
        ids = [program for program, _ in self.entries]
        if len(set(ids)) != len(ids):
            raise ValueError("Scored list contains duplicate programs")
        for (first, first_score), (second, second_score) in zip(
            self.entries, self.entries[1:], strict=False
        ):
            if (-first_score, first) > (-second_score, second):
                raise ValueError(f"Scored list out of order at program {second}")

    @classmethod
    def build(
        cls,
        programs: Sequence[ProgramId],
        scores: Iterable[float],
        user: UserId | None = None,
        time: datetime | None = None,
        scenario: ScenarioKind | None = None,
    ) -> ScoredList:
        """Sort (program, score) pairs into a scored list."""
        pairs = sorted(
            zip((int(p) for p in programs), (float(s) for s in scores), strict=True),
            key=lambda pair: (-pair[1], pair[0]),
        )
        return cls(tuple(pairs), user, time, scenario)

    def __len__(self) -> int:
        """Return the number of entries."""
        return len(self.entries)

    @property
    def ids(self) -> list[ProgramId]:
        """Return the program ids in rank order."""
        return [program for program, _ in self.entries]

    @property
    def scores(self) -> np.ndarray:
        """Return the scores in rank order."""
        return np.array([score for _, score in self.entries], dtype=np.float64)

    def top(self, k: int) -> list[ProgramId]:
        """Return the first ``k`` program ids."""
        if k < 1:
            raise ValueError(f"Invalid k: {k} (must be >= 1)")
        return self.ids[:k]

    def restrict(self, keep: Callable[[ProgramId, float], bool]) -> ScoredList:
        """Return the entries passing ``keep``, in the same order."""
        return ScoredList(
            tuple(entry for entry in self.entries if keep(*entry)),
            self.user,
            self.time,
            self.scenario,
        )


def random_rank(candidates: Sequence[ProgramId], seed: int | Sequence[int]) -> ScoredList:
    """Rank candidates by a seeded uniform random permutation."""
    rng = np.random.default_rng(seed)
    return ScoredList.build(candidates, rng.permutation(len(candidates)).astype(np.float64))


def popular_rank(
    candidates: Sequence[ProgramId], stats: HistoryStats, catalog: Catalog
) -> ScoredList:
    """Rank candidates by their global view count."""
    index = [catalog.program_index[p] for p in candidates]
    return ScoredList.build(candidates, stats.program_views[index])


def user_popular_rank(
    user: int, candidates: Sequence[ProgramId], stats: HistoryStats, catalog: Catalog
) -> ScoredList:
    """Rank candidates by the user's total watch seconds on them."""
    seconds = stats.row(stats.user_seconds, user)
    return ScoredList.build(candidates, seconds[[catalog.program_index[p] for p in candidates]])


@dataclass(frozen=True)
class TfIdfIndex:
    """Per-field L2-normalized TF-IDF vectors of every catalog program."""

    vectors: dict[str, sparse.csr_matrix]
    vocabularies: dict[str, dict[str, int]]
    document_frequency: dict[str, np.ndarray]
    idf: dict[str, np.ndarray]

    def field_similarity(self, field_name: str, first: int, second: int) -> float:
        """Return the cosine similarity of two programs in one field."""
        matrix = self.vectors[field_name]
        return float(matrix.getrow(first).multiply(matrix.getrow(second)).sum())

    def score_history(self, history: np.ndarray, programs: np.ndarray) -> np.ndarray:
        """Return the mean over history of the summed field cosines, per program."""
        if len(history) == 0:
            return np.zeros(len(programs))
        scores = np.zeros(len(programs))
        for matrix in self.vectors.values():
            if matrix.shape[1] == 0:
                continue
            centroid = np.asarray(matrix[history].mean(axis=0)).ravel()
            scores += matrix[programs] @ centroid
        return scores


def build_tfidf(catalog: Catalog) -> TfIdfIndex:
    """Build the title, description, actors and directors TF-IDF indexes."""
    if not len(catalog):
        raise ValueError("Cannot index an empty catalog")
    programs = [catalog.programs[int(pid)] for pid in catalog.program_ids]
    n_programs = len(programs)
    vectors, vocabularies, frequencies, idfs = {}, {}, {}, {}
    for field_name, analyzer in TEXT_FIELDS.items():
        vectorizer = CountVectorizer(analyzer=analyzer)
        try:
            counts = vectorizer.fit_transform(programs).tocsr().astype(np.float64)
            vocabulary = {term: int(col) for term, col in vectorizer.vocabulary_.items()}
        except ValueError:
            _LOGGER.debug("%s: Empty vocabulary, field contributes no similarity", field_name)
            counts = sparse.csr_matrix((n_programs, 0))
            vocabulary = {}
        df = np.asarray((counts > 0).sum(axis=0)).ravel()
        idf = np.log(n_programs / (1.0 + df))
        weighted = counts @ sparse.diags(idf) if counts.shape[1] else counts
        vectors[field_name] = normalize(weighted, norm="l2", axis=1).tocsr()
        vocabularies[field_name] = vocabulary
        frequencies[field_name] = df
        idfs[field_name] = idf
    _LOGGER.info(
        "Built TF-IDF index over %s programs (%s)",
        n_programs,
        ", ".join(f"{name}={len(vocab)}" for name, vocab in vocabularies.items()),
    )
    return TfIdfIndex(vectors, vocabularies, frequencies, idfs)


def content_based_score(
    candidate: Program, history: Sequence[Program], index: TfIdfIndex, catalog: Catalog
) -> float:
    """Return the mean over history of the summed per-field cosine similarities."""
    if not history:
        return 0.0
    rows = np.array([catalog.program_index[program.id] for program in history], dtype=np.int64)
    target = np.array([catalog.program_index[candidate.id]], dtype=np.int64)
    return float(index.score_history(rows, target)[0])


class Recommender(ABC):
    """Scores the candidates of a query."""

    name: str

    def __init__(self, catalog: Catalog, user_index: dict[UserId, int] | None = None) -> None:
        """Initialize a recommender."""
        self.catalog = catalog
        self.user_index = user_index or {}

    def user(self, user: UserId) -> int:
        """Return the dense index of a user, -1 if unknown."""
        return self.user_index.get(user, -1)

    def program_index(self, query: Query) -> np.ndarray:
        """Return the dense program indices of the query candidates."""
        return np.array(
            [self.catalog.program_index[p] for p in query.program_ids], dtype=np.int64
        )

    @abstractmethod
    def score(self, query: Query) -> np.ndarray:
        """Return one score per candidate of the query."""

    def rank(self, query: Query, scenario: ScenarioKind | None = None) -> ScoredList:
        """Return the full ranking of the query candidates."""
        return ScoredList.build(
            query.program_ids, self.score(query), query.user, query.time, scenario
        )

    def __repr__(self) -> str:
        """Return the representation."""
        return f"{type(self).__name__}()"


class RandomRecommender(Recommender):
    """Uniformly random rankings."""

    name = "Random"

    def __init__(self, catalog: Catalog, seed: int) -> None:
        """Initialize a random recommender."""
        super().__init__(catalog)
        self.seed = seed

    def score(self, query: Query) -> np.ndarray:
        """Return a seeded random permutation per query."""
        rng = np.random.default_rng([self.seed, query.qid])
        return rng.permutation(len(query.candidates)).astype(np.float64)


class PopularRecommender(Recommender):
    """Most watched programs among all users."""

    name = "Popular"

    def __init__(self, catalog: Catalog, stats: HistoryStats) -> None:
        """Initialize a popularity recommender."""
        super().__init__(catalog)
        self.stats = stats

    def score(self, query: Query) -> np.ndarray:
        """Return global positive view counts."""
        return self.stats.program_views[self.program_index(query)]


class UserPopularRecommender(Recommender):
    """Programs ranked by the user's own watch time."""

    name = "UserPopular"

    def __init__(
        self, catalog: Catalog, stats: HistoryStats, user_index: dict[UserId, int]
    ) -> None:
        """Initialize a per-user popularity recommender."""
        super().__init__(catalog, user_index)
        self.stats = stats

    def score(self, query: Query) -> np.ndarray:
        """Return the user's watch seconds per candidate."""
        seconds = self.stats.row(self.stats.user_seconds, self.user(query.user))
        return seconds[self.program_index(query)]

    def rank(self, query: Query, scenario: ScenarioKind | None = None) -> ScoredList:
        """Return only the candidates the user has already watched."""
        return super().rank(query, scenario).restrict(lambda _, score: score > 0)


class ContentBasedRecommender(Recommender):
    """TF-IDF similarity to the user's watching history."""

    name = "Content-based"

    def __init__(
        self,
        catalog: Catalog,
        stats: HistoryStats,
        index: TfIdfIndex,
        user_index: dict[UserId, int],
        history_cap: int | None = None,
    ) -> None:
        """Initialize a content-based recommender."""
        super().__init__(catalog, user_index)
        self.stats = stats
        self.index = index
        self.history_cap = history_cap

    def score(self, query: Query) -> np.ndarray:
        """Return the content-based score per candidate."""
        history = self.stats.history_of(self.user(query.user), self.history_cap)
        return self.index.score_history(history, self.program_index(query))


class ModelRecommender(Recommender):
    """Scores from any per-user factorization model."""

    def __init__(self, catalog: Catalog, model: PairScorer, name: str) -> None:
        """Initialize a model-backed recommender."""
        super().__init__(catalog)
        self.model = model
        self.name = name

    def score(self, query: Query) -> np.ndarray:
        """Return model scores, 0 for unknown ids."""
        return self.model.score(query.user, query.program_ids)
