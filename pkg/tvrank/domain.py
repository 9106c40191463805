"""tvrank domain types and the implicit-feedback labeling rule."""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime

import numpy as np

from .const import CATCHUP_WINDOW, Category, ViewMode
from .exceptions import LookupFailure
from .helpers import as_utc

type ProgramId = int
type ChannelId = int
type UserId = int


@dataclass(frozen=True)
class Program:
    """Catalog entry."""

    id: ProgramId
    title: str
    category: Category
    duration: int
    first_broadcast: datetime
    description: str = ""
    actors: tuple[str, ...] = ()
    directors: tuple[str, ...] = ()
    subcategory: str = ""
    is_series: bool = False
    episode_count: int = 0

    def __post_init__(self) -> None:
        """Validate the program."""
        if self.duration <= 0:
            raise ValueError(f"Invalid duration: {self.duration} (must be > 0)")
        if self.episode_count < 0:
            raise ValueError(f"Invalid episode count: {self.episode_count} (must be >= 0)")
        if (self.episode_count == 0) == self.is_series:
            raise ValueError(
                f"Program {self.id}: episode_count must be 0 exactly when is_series is false"
            )
        object.__setattr__(self, "first_broadcast", as_utc(self.first_broadcast))


@dataclass(frozen=True)
class Airing:
    """A broadcast of a program on a channel."""

    program: ProgramId
    channel: ChannelId
    start: datetime
    end: datetime

    def __post_init__(self) -> None:
        """Validate the airing."""
        object.__setattr__(self, "start", as_utc(self.start))
        object.__setattr__(self, "end", as_utc(self.end))
        if self.end <= self.start:
            raise ValueError(
                f"Invalid airing of {self.program}: end {self.end} <= start {self.start}"
            )

    @property
    def catchup_until(self) -> datetime:
        """Return the end of the catch-up availability window."""
        return self.start + CATCHUP_WINDOW

    def is_on_air(self, moment: datetime) -> bool:
        """Return `True` if the airing is being broadcast at ``moment``."""
        return self.start <= moment < self.end

    def is_available(self, moment: datetime, mode: ViewMode) -> bool:
        """Return `True` if the airing can be watched at ``moment`` in ``mode``."""
        if mode is ViewMode.LIVE:
            return self.is_on_air(moment)
        return self.start <= moment <= self.catchup_until


@dataclass(frozen=True)
class ViewEvent:
    """A user watching (part of) a program."""

    user: UserId
    program: ProgramId
    channel: ChannelId
    watch_start: datetime
    watched_seconds: float
    mode: ViewMode = ViewMode.LIVE

    def __post_init__(self) -> None:
        """Validate the event."""
        if self.watched_seconds < 0:
            raise ValueError(f"Invalid watched seconds: {self.watched_seconds} (must be >= 0)")
        object.__setattr__(self, "watch_start", as_utc(self.watch_start))


@dataclass(frozen=True)
class Quadruple:
    """A <user, program, preference, features> ranking record."""

    user: UserId
    program: ProgramId
    preference: int
    features: np.ndarray = field(compare=False)

    def __post_init__(self) -> None:
        """Validate the record."""
        if self.preference not in (0, 1):
            raise ValueError(f"Invalid preference: {self.preference} (must be 0 or 1)")


@dataclass(frozen=True)
class FractionAtLeast:
    """Watched more than a fraction of the program."""

    fraction: float = 0.5

    def __str__(self) -> str:
        """Return the config literal."""
        return f"fraction:{self.fraction:g}"


@dataclass(frozen=True)
class MinutesAtLeast:
    """Watched more than a number of minutes."""

    minutes: float = 10

    def __str__(self) -> str:
        """Return the config literal."""
        return f"minutes:{self.minutes:g}"


type PreferenceRule = FractionAtLeast | MinutesAtLeast


def parse_rule(value: str) -> PreferenceRule:
    """Parse ``fraction:<x>`` or ``minutes:<m>``."""
    kind, _, threshold = value.partition(":")
    try:
        number = float(threshold)
    except ValueError as ex:
        raise ValueError(f"Invalid preference rule: {value!r}") from ex
    if kind == "fraction" and 0 <= number < 1:
        return FractionAtLeast(number)
    if kind == "minutes" and number >= 0:
        return MinutesAtLeast(number)
    raise ValueError(f"Invalid preference rule: {value!r}")


def watched_share(seconds: float, program: Program) -> float:
    """Return the share of the program covered by ``seconds`` of viewing, clamped to 1."""
    return min(1.0, seconds / program.duration)


def watch_fraction(event: ViewEvent, program: Program) -> float:
    """Return the watched share of the program, clamped to 1."""
    if program.id != event.program:
        raise LookupFailure(f"Event references program {event.program}, got {program.id}")
    return watched_share(event.watched_seconds, program)


def preference_label(fraction: float, watched_seconds: float, rule: PreferenceRule) -> int:
    """Return 1 if the rule's threshold is strictly exceeded, else 0."""
    if isinstance(rule, FractionAtLeast):
        return int(fraction > rule.fraction)
    return int(watched_seconds > rule.minutes * 60)


@dataclass(frozen=True)
class Query:
    """One ranking problem: a user session and its candidate airings."""

    qid: int
    user: UserId
    time: datetime
    candidates: tuple[Airing, ...]
    truth: frozenset[ProgramId] = frozenset()

    @property
    def program_ids(self) -> list[ProgramId]:
        """Return the candidate program ids in candidate order."""
        return [airing.program for airing in self.candidates]
