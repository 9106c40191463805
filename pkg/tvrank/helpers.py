"""tvrank helper functions."""

from __future__ import annotations

from datetime import UTC, datetime, timedelta
from functools import cache
from importlib import resources
import re

import numpy as np

from .const import DayPart

# Table: (hour_limit, day_part); the first limit above the hour wins
DAYPART_TABLE = [
    (6, DayPart.NIGHT),
    (12, DayPart.MORNING),
    (18, DayPart.AFTERNOON),
    (24, DayPart.EVENING),
]

_TOKEN_SPLIT = re.compile(r"[^0-9a-z]+")


def day_part(hour: int) -> DayPart:
    """Return the day part for an hour of the day (0-23)."""
    if not 0 <= hour <= 23:
        raise ValueError(f"Invalid hour: {hour} (range is [0, 23])")
    for hour_limit, part in DAYPART_TABLE:
        if hour < hour_limit:
            return part
    return DayPart.EVENING


def day_parts(epochs: np.ndarray) -> np.ndarray:
    """Return the day part code of every epoch-second timestamp."""
    hours = (np.asarray(epochs, dtype=np.int64) // 3600) % 24
    limits = np.array([limit for limit, _ in DAYPART_TABLE])
    return np.searchsorted(limits, hours, side="right")


def weekdays(epochs: np.ndarray) -> np.ndarray:
    """Return the weekday (Monday=0) of every epoch-second timestamp."""
    # 1970-01-01 was a Thursday
    return ((np.asarray(epochs, dtype=np.int64) // 86400) + 3) % 7


def as_utc(value: datetime) -> datetime:
    """Return an aware UTC datetime; naive values are taken as UTC."""
    if value.tzinfo is None:
        return value.replace(tzinfo=UTC)
    return value.astimezone(UTC)


def epoch(value: datetime) -> int:
    """Return whole epoch seconds for a datetime."""
    return int(as_utc(value).timestamp())


def from_epoch(seconds: float) -> datetime:
    """Return the UTC datetime for epoch seconds."""
    return datetime.fromtimestamp(int(seconds), UTC)


def week_origin(first: datetime) -> datetime:
    """Return midnight of the Monday on or before ``first``."""
    first = as_utc(first)
    midnight = first.replace(hour=0, minute=0, second=0, microsecond=0)
    return midnight - timedelta(days=midnight.weekday())


def week_start(week: int, origin: datetime) -> datetime:
    """Return the first instant of a week."""
    return as_utc(origin) + timedelta(weeks=week)


@cache
def stopwords() -> frozenset[str]:
    """Return the shipped stopword list."""
    text = resources.files("tvrank").joinpath("data/stopwords.txt").read_text("utf-8")
    return frozenset(
        word for line in text.splitlines() if (word := line.strip()) and not word.startswith("#")
    )


def tokenize(text: str, stop: frozenset[str] | None = None) -> list[str]:
    """Lowercase, split on non-alphanumerics and drop stopwords."""
    if stop is None:
        stop = stopwords()
    return [token for token in _TOKEN_SPLIT.split(text.lower()) if token and token not in stop]


def name_tokens(names: tuple[str, ...] | list[str]) -> list[str]:
    """Return person names as whole lower-cased tokens."""
    return [normalized for name in names if (normalized := " ".join(name.lower().split()))]


def derive_seed(root: int, *path: int) -> int:
    """Return a child seed of ``root`` for a fixed index path."""
    return int(np.random.SeedSequence([root, *path]).generate_state(1)[0])
