"""tvrank re-ranking: the multi-objective function and GreedyRec."""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
import logging

import numpy as np

from .const import DEFAULT_OBJECTIVE, AccuracySource
from .domain import ProgramId
from .metrics import (
    HistoryProfile,
    ListedProgram,
    distance_matrix,
    ild_at_k,
    msi_at_k,
    ndcg_at_k,
    novelty,
    unexpectedness_at_k,
)
from .recommenders import ScoredList

_LOGGER = logging.getLogger(__name__)

_TIE_DECIMALS = 12


@dataclass(frozen=True)
class ObjectiveSpec:
    """Weights of the accuracy, diversity, novelty and serendipity terms."""

    weights: tuple[float, float, float, float] = DEFAULT_OBJECTIVE
    k: int = 5
    accuracy_source: AccuracySource = AccuracySource.MODEL_SCORE

    def __post_init__(self) -> None:
        """Validate the spec."""
        if len(self.weights) != 4:
            raise ValueError(f"Invalid objective: {self.weights} (expected 4 weights)")
        if any(weight < 0 for weight in self.weights):
            raise ValueError(f"Invalid objective: {self.weights} (weights must be >= 0)")
        if not any(weight > 0 for weight in self.weights):
            raise ValueError(f"Invalid objective: {self.weights} (one weight must be > 0)")
        if self.k < 1:
            raise ValueError(f"Invalid k: {self.k} (must be >= 1)")

    @classmethod
    def parse(
        cls, value: str, k: int = 5, accuracy_source: AccuracySource = AccuracySource.MODEL_SCORE
    ) -> ObjectiveSpec:
        """Parse ``w_acc,w_div,w_nov,w_ser``."""
        try:
            weights = tuple(float(part) for part in value.split(","))
        except ValueError as ex:
            raise ValueError(f"Invalid objective: {value!r}") from ex
        return cls(weights, k, accuracy_source)  # type: ignore[arg-type]

    def with_k(self, k: int) -> ObjectiveSpec:
        """Return the spec for another list size."""
        return ObjectiveSpec(self.weights, k, self.accuracy_source)

    def with_source(self, accuracy_source: AccuracySource) -> ObjectiveSpec:
        """Return the spec with another accuracy source."""
        return ObjectiveSpec(self.weights, self.k, accuracy_source)


@dataclass(frozen=True)
class RerankContext:
    """What the objective needs besides the list itself."""

    listed: Mapping[ProgramId, ListedProgram]
    audience: Mapping[ProgramId, float]
    n_users: int
    history: HistoryProfile
    scores: Mapping[ProgramId, float] = field(default_factory=dict)
    truth: frozenset[ProgramId] = frozenset()

    @classmethod
    def of(
        cls,
        candidates: ScoredList,
        listed: Mapping[ProgramId, ListedProgram],
        audience: Mapping[ProgramId, float],
        n_users: int,
        history: HistoryProfile,
        truth: frozenset[ProgramId] = frozenset(),
    ) -> RerankContext:
        """Build a context whose model scores come from a scored list."""
        return cls(listed, audience, n_users, history, dict(candidates.entries), truth)

    def gains(self) -> dict[ProgramId, float]:
        """Return model scores min-max normalized over the candidates; all 1 when equal."""
        if not self.scores:
            return {}
        values = np.array(list(self.scores.values()), dtype=np.float64)
        low, high = values.min(), values.max()
        if high <= low:
            return dict.fromkeys(self.scores, 1.0)
        return {program: (score - low) / (high - low) for program, score in self.scores.items()}


def _discounts(k: int) -> np.ndarray:
    return 1.0 / np.log2(np.arange(2, k + 2))


def _model_ndcg(ranked: Sequence[ProgramId], gains: Mapping[ProgramId, float], k: int) -> float:
    ideal_gains = np.sort(np.fromiter(gains.values(), dtype=np.float64))[::-1][:k]
    ideal = float(ideal_gains @ _discounts(len(ideal_gains)))
    if ideal <= 0:
        return 0.0
    listed = np.array([gains.get(program, 0.0) for program in ranked[:k]])
    return float(listed @ _discounts(len(listed))) / ideal


def objective_eval(
    ranked: Sequence[ProgramId], spec: ObjectiveSpec, context: RerankContext
) -> float:
    """Return the weighted sum of the accuracy, ILD, MSI and unexpectedness terms."""
    if not ranked:
        raise ValueError("Cannot evaluate the objective of an empty list")
    w_acc, w_div, w_nov, w_ser = spec.weights
    k = spec.k
    if spec.accuracy_source is AccuracySource.MODEL_SCORE:
        accuracy = _model_ndcg(ranked, context.gains(), k)
    else:
        accuracy = ndcg_at_k(ranked, context.truth, k) or 0.0
    items = [context.listed[program] for program in ranked[:k]]
    return (
        w_acc * accuracy
        + w_div * ild_at_k(items, k)
        + w_nov * msi_at_k(list(ranked), context.audience, k, context.n_users)
        + w_ser * unexpectedness_at_k(items, context.history, k)
    )


def greedy_rec(
    candidates: ScoredList,
    spec: ObjectiveSpec,
    context: RerankContext,
    pool: int | None = None,
) -> list[ProgramId]:
    """Grow a list by repeatedly appending the candidate that maximizes the objective.

    Continues while candidates remain and the list is shorter than ``spec.k``.
    Ties go to the higher model score, then the lower program id. ``pool``
    restricts the candidates to the model's top ``pool``.
    """
    entries = candidates.entries[:pool] if pool is not None else candidates.entries
    if not entries:
        return []
    ids = np.array([program for program, _ in entries], dtype=np.int64)
    scores = np.array([score for _, score in entries], dtype=np.float64)
    items = [context.listed[int(program)] for program in ids]
    w_acc, w_div, w_nov, w_ser = spec.weights
    k = min(spec.k, len(ids))
    discounts = _discounts(spec.k)

    if spec.accuracy_source is AccuracySource.MODEL_SCORE:
        all_gains = context.gains()
        gains = np.array([all_gains.get(int(program), 0.0) for program in ids])
        ideal_gains = np.sort(np.fromiter(all_gains.values(), dtype=np.float64))[::-1][: spec.k]
    else:
        gains = np.isin(ids, list(context.truth)).astype(np.float64)
        ideal_gains = np.ones(min(spec.k, len(context.truth)))
    ideal = float(ideal_gains @ discounts[: len(ideal_gains)])
    novelties = np.array(
        [novelty(context.audience.get(int(program), 0), context.n_users) for program in ids]
    )
    surprise = np.array([context.history.mean_distance(item) for item in items])
    distances = distance_matrix(items) if w_div > 0 else np.zeros((len(ids), len(ids)))

    remaining = np.ones(len(ids), bool)
    chosen: list[int] = []
    dcg = pair_sum = novelty_sum = surprise_sum = 0.0
    to_chosen = np.zeros(len(ids))
    for position in range(k):
        size = position + 1
        accuracy = (dcg + gains * discounts[position]) / ideal if ideal > 0 else np.zeros(len(ids))
        pairs = size * (size - 1) / 2
        diversity = (pair_sum + to_chosen) / pairs if pairs else np.zeros(len(ids))
        values = (
            w_acc * accuracy
            + w_div * diversity
            + w_nov * (novelty_sum + novelties) / size
            + w_ser * (surprise_sum + surprise) / size
        )
        values = np.where(remaining, np.round(values, _TIE_DECIMALS), -np.inf)
        best = int(np.lexsort((ids, -scores, -values))[0])
        chosen.append(best)
        remaining[best] = False
        dcg += gains[best] * discounts[position]
        pair_sum += to_chosen[best]
        novelty_sum += novelties[best]
        surprise_sum += surprise[best]
        to_chosen += distances[best]
    return [int(ids[index]) for index in chosen]
