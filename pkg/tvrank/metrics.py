"""tvrank metrics: accuracy, diversity, novelty and serendipity of ranked lists."""

from __future__ import annotations

from collections import Counter
from collections.abc import Collection, Mapping, Sequence
from dataclasses import dataclass
from enum import StrEnum
import math

import numpy as np

from .const import Category
from .domain import Airing, ChannelId, ProgramId
from .ingestion import Catalog


class Metric(StrEnum):
    """Reported metrics, in table column order."""

    NDCG = "ndcg"
    """Accuracy"""
    ILD = "ild"
    """Diversity"""
    MSI = "msi"
    """Novelty"""
    UNEXPECTEDNESS = "unexpectedness"
    """Serendipity"""
    ACCURACY_NEW = "accuracy_new"
    """nDCG on programs the user never saw"""
    OBJECTIVE = "objective"
    """Global multi-objective value"""


METRIC_LABELS = {
    Metric.NDCG: "Accuracy",
    Metric.ILD: "Diversity",
    Metric.MSI: "Novelty",
    Metric.UNEXPECTEDNESS: "Serendipity",
    Metric.ACCURACY_NEW: "Accuracy (new)",
    Metric.OBJECTIVE: "Global",
}


@dataclass(frozen=True)
class ListedProgram:
    """A program as listed: with the channel of the airing that listed it."""

    program: ProgramId
    category: Category
    subcategory: str
    channel: ChannelId

    @classmethod
    def of(cls, catalog: Catalog, airing: Airing) -> ListedProgram:
        """Return the listing of an airing."""
        program = catalog.programs[airing.program]
        return cls(program.id, program.category, program.subcategory, airing.channel)


def distance(first: ListedProgram, second: ListedProgram) -> float:
    """Return 1 minus the mean of the shared category, subcategory and channel indicators."""
    shared = (
        (first.category == second.category)
        + (first.subcategory == second.subcategory)
        + (first.channel == second.channel)
    )
    return 1.0 - shared / 3.0


def distance_matrix(items: Sequence[ListedProgram]) -> np.ndarray:
    """Return the pairwise distance matrix of a list."""
    categories = np.array([item.category.code for item in items])
    codes: dict[str, int] = {}
    subcategories = np.array([codes.setdefault(item.subcategory, len(codes)) for item in items])
    channels = np.array([item.channel for item in items])
    shared = (
        (categories[:, None] == categories[None, :]).astype(np.float64)
        + (subcategories[:, None] == subcategories[None, :])
        + (channels[:, None] == channels[None, :])
    )
    return 1.0 - shared / 3.0


def _check_k(k: int) -> None:
    if k < 1:
        raise ValueError(f"Invalid k: {k} (must be >= 1)")


def dcg_at_k(relevance: Sequence[float], k: int) -> float:
    """Return the DCG of the first ``k`` relevance values."""
    gains = np.asarray(relevance[:k], dtype=np.float64)
    return float(np.sum(gains / np.log2(np.arange(2, len(gains) + 2))))


def ndcg_at_k(
    ranked: Sequence[ProgramId],
    truth: Collection[ProgramId],
    k: int,
    candidates: Collection[ProgramId] | None = None,
) -> float | None:
    """Return binary nDCG@k, or None when no relevant program is available."""
    _check_k(k)
    relevant = set(truth) if candidates is None else set(truth) & set(candidates)
    if not relevant:
        return None
    ideal = dcg_at_k([1.0] * min(k, len(relevant)), k)
    return dcg_at_k([1.0 if program in relevant else 0.0 for program in ranked], k) / ideal


def ild_at_k(items: Sequence[ListedProgram], k: int) -> float:
    """Return the mean distance over all unordered pairs of the top ``k``."""
    _check_k(k)
    items = items[:k]
    if len(items) < 2:
        return 0.0
    upper = np.triu_indices(len(items), 1)
    return float(distance_matrix(items)[upper].mean())


def novelty(audience: float, n_users: int) -> float:
    """Return the normalized self-information of a program watched by ``audience`` users."""
    if n_users < 1:
        raise ValueError(f"Invalid number of users: {n_users} (must be >= 1)")
    if audience <= 0:
        return 1.0
    if n_users == 1:
        return 0.0
    return min(1.0, max(0.0, math.log2(n_users / max(1.0, audience)) / math.log2(n_users)))


def msi_at_k(
    ranked: Sequence[ProgramId], audience: Mapping[ProgramId, float], k: int, n_users: int
) -> float:
    """Return the mean novelty of the top ``k``."""
    _check_k(k)
    ranked = ranked[:k]
    if not ranked:
        return 0.0
    return float(np.mean([novelty(audience.get(program, 0), n_users) for program in ranked]))


@dataclass(frozen=True)
class HistoryProfile:
    """Category, subcategory and channel counts of a watching history."""

    size: int
    categories: Counter[Category]
    subcategories: Counter[str]
    channels: Counter[ChannelId]

    @classmethod
    def of(cls, history: Sequence[ListedProgram]) -> HistoryProfile:
        """Count a history."""
        return cls(
            len(history),
            Counter(item.category for item in history),
            Counter(item.subcategory for item in history),
            Counter(item.channel for item in history),
        )

    def mean_distance(self, item: ListedProgram) -> float:
        """Return the mean distance of an item to every history entry."""
        if not self.size:
            return 1.0
        shared = (
            self.categories[item.category]
            + self.subcategories[item.subcategory]
            + self.channels[item.channel]
        )
        return 1.0 - shared / (3.0 * self.size)


def unexpectedness_at_k(
    items: Sequence[ListedProgram],
    history: Sequence[ListedProgram] | HistoryProfile,
    k: int,
) -> float:
    """Return the mean distance between the top ``k`` and the history; 1 for an empty history."""
    _check_k(k)
    profile = history if isinstance(history, HistoryProfile) else HistoryProfile.of(history)
    items = items[:k]
    if not profile.size:
        return 1.0
    if not items:
        return 0.0
    return float(np.mean([profile.mean_distance(item) for item in items]))
