"""Test helpers: a hand-made two-week dataset and the small synthetic parameters."""

from __future__ import annotations

from datetime import UTC, datetime, timedelta

from tvrank.const import Category, ViewMode
from tvrank.domain import Airing, Program, ViewEvent
from tvrank.ingestion import Catalog
from tvrank.synthgen import SynthParams

# a Monday
T0 = datetime(2024, 1, 1, tzinfo=UTC)

NEWS, DRAMA, NATURE, MOVIE = 1, 2, 3, 4
ALICE, BOB = 100, 200

SMALL_SYNTH = SynthParams(
    n_users=40,
    n_channels=4,
    programs_per_week=24,
    n_weeks=6,
    seed=11,
    sessions_per_week=8.0,
)


def at(day: int, hour: int, minute: int = 0) -> datetime:
    """Return a time ``day`` days after T0."""
    return T0 + timedelta(days=day, hours=hour, minutes=minute)


def make_program(
    program_id: int, title: str, category: Category, duration: int, **kwargs
) -> Program:
    """Return a program first broadcast at T0."""
    episodes = kwargs.pop("episode_count", 0)
    return Program(
        id=program_id,
        title=title,
        category=category,
        duration=duration,
        first_broadcast=T0,
        is_series=episodes > 0,
        episode_count=episodes,
        **kwargs,
    )


def tiny_catalog() -> Catalog:
    """Two channels over two weeks.

    Channel 1 carries the news at 19:00 and a drama at 20:00 every day;
    channel 2 a documentary at 20:00 every day and a movie at 21:00 on
    each Monday.
    """
    programs = {
        NEWS: make_program(
            NEWS,
            "Evening News",
            Category.NEWS,
            1800,
            description="daily headlines and weather",
            subcategory="national",
            episode_count=10,
        ),
        DRAMA: make_program(
            DRAMA,
            "Harbor Lights",
            Category.TV_SERIES,
            3600,
            description="a family drama by the harbor",
            actors=("Ana Costa", "Hugo Dias"),
            subcategory="drama",
            episode_count=8,
        ),
        NATURE: make_program(
            NATURE,
            "Wild Planet",
            Category.DOCUMENTARIES,
            3600,
            description="wildlife of the ocean and the forest",
            subcategory="nature",
        ),
        MOVIE: make_program(
            MOVIE,
            "Stone Road",
            Category.MOVIES,
            5400,
            description="a chase across the desert",
            directors=("Rita Lopes",),
            subcategory="action",
        ),
    }
    airings = []
    for day in range(14):
        airings.append(Airing(NEWS, 1, at(day, 19), at(day, 19, 30)))
        airings.append(Airing(DRAMA, 1, at(day, 20), at(day, 21)))
        airings.append(Airing(NATURE, 2, at(day, 20), at(day, 21)))
    for day in (0, 7):
        airings.append(Airing(MOVIE, 2, at(day, 21), at(day, 22, 30)))
    return Catalog(programs=programs, airings=tuple(airings), channels=frozenset({1, 2}))


def tiny_events() -> list[ViewEvent]:
    """Alice watches the news daily and the drama once; Bob samples nature live, then catches up."""
    events = [ViewEvent(ALICE, NEWS, 1, at(day, 19), 1800) for day in range(14)]
    events.append(ViewEvent(ALICE, DRAMA, 1, at(0, 20), 3000))
    events.append(ViewEvent(BOB, NATURE, 2, at(0, 20), 600))
    events.append(ViewEvent(BOB, NATURE, 2, at(1, 20), 600))
    events.append(ViewEvent(BOB, NATURE, 2, at(8, 10), 3600, ViewMode.CATCHUP))
    return events

# configuration file contents for quick command-line runs
SMALL_MODELS = {
    "wrmf": {"factors": 8, "iterations": 4},
    "funk_svd": {"factors": 4, "epochs": 3},
    "lambdamart": {"rounds": 8, "min_samples_leaf": 5, "max_leaves": 6},
    "k_values": [5],
}
