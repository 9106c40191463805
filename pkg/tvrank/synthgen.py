"""tvrank synthetic data: a broadcast schedule and the users watching it."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
from datetime import UTC, datetime, timedelta
import json
import logging
from pathlib import Path
from typing import Any

import numpy as np

from .const import CATCHUP_WINDOW, DEFAULT_SEED, Category, DayPart, ViewMode
from .domain import Airing, ChannelId, Program, ProgramId, UserId, ViewEvent
from .exceptions import ScheduleOverflowError
from .helpers import derive_seed, epoch, from_epoch
from .ingestion import Catalog, write_epg, write_views

_LOGGER = logging.getLogger(__name__)

EPG_FILE = "epg.csv"
VIEWS_FILE = "views.jsonl"
MANIFEST_FILE = "manifest.json"

SCHEDULE_START = datetime(2015, 10, 5, tzinfo=UTC)
SLOT = timedelta(minutes=30)
FIRST_SLOT_HOUR = 6
SLOTS_PER_DAY = 36
TWIN_OFFSET = 1_000_000

CATEGORY_WEIGHTS = {
    Category.NEWS: 0.12,
    Category.TV_SERIES: 0.24,
    Category.ENTERTAINMENT: 0.18,
    Category.KIDS: 0.10,
    Category.DOCUMENTARIES: 0.12,
    Category.SPORTS: 0.08,
    Category.MOVIES: 0.12,
    Category.ADULTS: 0.04,
}

# length in half-hour slots
CATEGORY_SLOTS = {
    Category.NEWS: (1,),
    Category.TV_SERIES: (1, 2),
    Category.ENTERTAINMENT: (2,),
    Category.KIDS: (1,),
    Category.DOCUMENTARIES: (2,),
    Category.SPORTS: (3, 4),
    Category.MOVIES: (3, 4),
    Category.ADULTS: (2,),
}

SERIES_CATEGORIES = frozenset(
    {Category.NEWS, Category.TV_SERIES, Category.ENTERTAINMENT, Category.KIDS}
)
STRIP_CATEGORIES = frozenset({Category.NEWS, Category.TV_SERIES, Category.KIDS})

SUBCATEGORIES = {
    Category.NEWS: ("national", "world", "weather"),
    Category.TV_SERIES: ("drama", "comedy", "crime", "soap"),
    Category.ENTERTAINMENT: ("talk show", "quiz", "reality", "music"),
    Category.KIDS: ("cartoon", "education"),
    Category.DOCUMENTARIES: ("nature", "history", "science"),
    Category.SPORTS: ("football", "tennis", "motorsport"),
    Category.MOVIES: ("action", "comedy", "drama", "thriller"),
    Category.ADULTS: ("late night",),
}

TITLE_WORDS = (
    "golden", "harbor", "night", "city", "river", "secret", "wild", "blue", "stone",
    "crown", "summer", "winter", "lost", "house", "bright", "iron", "silent", "north",
    "garden", "storm", "island", "kitchen", "valley", "echo", "fire", "mirror", "road",
    "planet", "castle", "signal",
)

DESCRIPTION_WORDS = {
    Category.NEWS: ("report", "headlines", "politics", "economy", "weather", "interview"),
    Category.TV_SERIES: ("family", "detective", "hospital", "romance", "betrayal", "season"),
    Category.ENTERTAINMENT: ("studio", "guests", "contest", "celebrity", "prize", "music"),
    Category.KIDS: ("adventure", "friends", "animals", "learning", "songs", "school"),
    Category.DOCUMENTARIES: ("wildlife", "ocean", "ancient", "science", "expedition", "climate"),
    Category.SPORTS: ("match", "league", "highlights", "championship", "race", "goal"),
    Category.MOVIES: ("hero", "chase", "love", "mystery", "escape", "revenge"),
    Category.ADULTS: ("late", "night", "talk", "cabaret", "comedy", "club"),
}

FIRST_NAMES = (
    "Ana", "Bruno", "Carla", "Diogo", "Elena", "Filipe", "Gloria", "Hugo", "Ines", "Joao",
    "Lara", "Miguel", "Nuno", "Olga", "Pedro", "Rita", "Sofia", "Tiago", "Vera", "Xavier",
)
LAST_NAMES = (
    "Almeida", "Barros", "Costa", "Dias", "Esteves", "Ferreira", "Gomes", "Henriques",
    "Lopes", "Martins", "Neves", "Oliveira", "Pereira", "Ramos", "Santos", "Teixeira",
)

# live sessions chain through the next program or zap; catch-up sessions pick again
_MAX_VIEWS_PER_SESSION = 4
_CONTINUE_PROB = 0.6
_TWIN_SWITCH_PROB = 0.3
_FAVORITE_CHANNEL_BOOST = 4.0
_DAYPART_HOURS = {
    DayPart.MORNING: (6, 12),
    DayPart.AFTERNOON: (12, 18),
    DayPart.EVENING: (18, 24),
}
_DAYPART_PRIOR = (0.2, 0.3, 0.5)

# seed purposes
_SEED_SCHEDULE = 0
_SEED_USERS = 1


@dataclass(frozen=True)
class SynthParams:
    """Size and behavior knobs of the generator."""

    n_users: int = 500
    n_channels: int = 20
    programs_per_week: int = 340
    n_weeks: int = 10
    seed: int = DEFAULT_SEED
    channel_loyalty: float = 0.5
    category_affinity_concentration: float = 0.5
    series_repeat_prob: float = 0.6
    daypart_regularity: float = 0.7
    catchup_share: float = 0.2
    series_share: float = 0.6
    strip_share: float = 0.3
    simulcast_share: float = 0.05
    sessions_per_week: float = 6.0

    def __post_init__(self) -> None:
        """Validate the knobs."""
        for name in ("n_users", "n_channels", "programs_per_week", "n_weeks"):
            if (value := getattr(self, name)) < 1:
                raise ValueError(f"Invalid {name}: {value} (must be >= 1)")
        for name in (
            "channel_loyalty",
            "series_repeat_prob",
            "daypart_regularity",
            "catchup_share",
            "series_share",
            "strip_share",
            "simulcast_share",
        ):
            if not 0 <= (value := getattr(self, name)) <= 1:
                raise ValueError(f"Invalid {name}: {value} (range is [0, 1])")
        if self.category_affinity_concentration <= 0:
            raise ValueError(
                f"Invalid category_affinity_concentration: {self.category_affinity_concentration}"
                " (must be > 0)"
            )
        if self.sessions_per_week <= 0:
            raise ValueError(f"Invalid sessions_per_week: {self.sessions_per_week} (must be > 0)")


@dataclass
class _Line:
    """A recurring schedule position carrying successive series seasons."""

    channel: ChannelId
    category: Category
    length: int
    days: tuple[int, ...]
    slot: int
    program: ProgramId = 0
    weeks_left: int = 0


@dataclass(frozen=True)
class UserProfile:
    """Latent viewing habits of a synthetic user."""

    user: UserId
    home_channel: ChannelId
    favorite_channels: tuple[ChannelId, ...]
    category_affinity: tuple[float, ...]
    daypart: DayPart
    sessions_per_week: float
    catchup_share: float

    def as_dict(self) -> dict[str, Any]:
        """Return the manifest entry."""
        return {
            "home_channel": self.home_channel,
            "favorite_channels": list(self.favorite_channels),
            "category_affinity": {
                category.value: round(weight, 6)
                for category, weight in zip(Category, self.category_affinity, strict=True)
            },
            "daypart": self.daypart.name.lower(),
            "sessions_per_week": round(self.sessions_per_week, 6),
            "catchup_share": round(self.catchup_share, 6),
        }


@dataclass
class SynthData:
    """A generated catalog, its view events and the latent truth behind them."""

    params: SynthParams
    catalog: Catalog
    events: list[ViewEvent]
    profiles: list[UserProfile]
    twins: dict[ProgramId, ProgramId] = field(default_factory=dict)

    def manifest(self) -> dict[str, Any]:
        """Return the manifest of latent profiles."""
        return {
            "params": asdict(self.params),
            "schedule_start": SCHEDULE_START.isoformat().replace("+00:00", "Z"),
            "programs": len(self.catalog),
            "airings": len(self.catalog.airings),
            "events": len(self.events),
            "simulcasts": {str(twin): base for twin, base in sorted(self.twins.items())},
            "users": {str(profile.user): profile.as_dict() for profile in self.profiles},
        }


class _ScheduleBuilder:
    """Lays out programs on a weekly grid of half-hour slots per channel."""

    def __init__(self, params: SynthParams, rng: np.random.Generator) -> None:
        self.params = params
        self.rng = rng
        self.programs: dict[ProgramId, Program] = {}
        self.airings: list[Airing] = []
        self.twins: dict[ProgramId, ProgramId] = {}
        self._next_id = 1
        self._categories = list(Category)
        prior = np.array([CATEGORY_WEIGHTS[c] for c in self._categories])
        mixes = [prior * rng.dirichlet(np.full(len(prior), 2.0)) for _ in range(params.n_channels)]
        self.channel_mix = [mix / mix.sum() for mix in mixes]
        self.lines: list[_Line] = []
        self.home_grid = np.zeros((params.n_channels, 7, SLOTS_PER_DAY), dtype=bool)

    @property
    def channels(self) -> range:
        """Return the standard-definition channel ids."""
        return range(1, self.params.n_channels + 1)

    def _programs_of(self, channel: ChannelId) -> tuple[int, int]:
        """Return the series lines and weekly one-shots a channel carries."""
        per_channel, extra = divmod(self.params.programs_per_week, self.params.n_channels)
        total = per_channel + (channel <= extra)
        series = round(total * self.params.series_share)
        return series, total - series

    def _category(self, channel: ChannelId, allowed: frozenset[Category] | None = None) -> Category:
        mix = self.channel_mix[channel - 1].copy()
        if allowed is not None:
            mix *= [category in allowed for category in self._categories]
        return self._categories[int(self.rng.choice(len(mix), p=mix / mix.sum()))]

    def _free_starts(self, grid: np.ndarray, days: tuple[int, ...], length: int) -> list[int]:
        return [
            slot
            for slot in range(SLOTS_PER_DAY - length + 1)
            if not grid[list(days), slot : slot + length].any()
        ]

    def plan_lines(self) -> None:
        """Fix the weekly home position of every series line."""
        for channel in self.channels:
            n_series, _ = self._programs_of(channel)
            grid = self.home_grid[channel - 1]
            for _ in range(n_series):
                category = self._category(channel, SERIES_CATEGORIES)
                length = int(self.rng.choice(CATEGORY_SLOTS[category]))
                strip = category in STRIP_CATEGORIES and self.rng.random() < self.params.strip_share
                days = (0, 1, 2, 3, 4) if strip else (int(self.rng.integers(7)),)
                if not (starts := self._free_starts(grid, days, length)):
                    raise ScheduleOverflowError(
                        f"channel {channel}: no room for {len(days)}-day series of {length} slot(s)"
                    )
                slot = int(self.rng.choice(starts))
                grid[list(days), slot : slot + length] = True
                self.lines.append(_Line(channel, category, length, days, slot))

    def _new_program(
        self, category: Category, length: int, start: datetime, series: bool, episodes: int
    ) -> Program:
        program_id = self._next_id
        self._next_id += 1
        words = self.rng.choice(TITLE_WORDS, 2, replace=False)
        subcategory = str(self.rng.choice(SUBCATEGORIES[category]))
        description = " ".join(self.rng.choice(DESCRIPTION_WORDS[category], 5))
        names = [
            f"{self.rng.choice(FIRST_NAMES)} {self.rng.choice(LAST_NAMES)}"
            for _ in range(int(self.rng.integers(0, 4)))
        ]
        program = Program(
            id=program_id,
            title=f"{words[0].title()} {words[1].title()} {program_id}",
            category=category,
            duration=length * int(SLOT.total_seconds()),
            first_broadcast=start,
            description=f"{subcategory} {description}",
            actors=tuple(dict.fromkeys(names[1:])),
            directors=tuple(names[:1]),
            subcategory=subcategory,
            is_series=series,
            episode_count=episodes if series else 0,
        )
        self.programs[program_id] = program
        if self.rng.random() < self.params.simulcast_share:
            self.twins[program_id + TWIN_OFFSET] = program_id
        return program

    def _air(self, program: Program, channel: ChannelId, day: datetime, slot: int) -> None:
        start = day + timedelta(hours=FIRST_SLOT_HOUR) + slot * SLOT
        end = start + timedelta(seconds=program.duration)
        self.airings.append(Airing(program.id, channel, start, end))

    def build_week(self, week: int) -> None:
        """Schedule one week: series premieres, one-shots, then reruns in the gaps."""
        week_start = SCHEDULE_START + timedelta(weeks=week)
        days = [week_start + timedelta(days=day) for day in range(7)]
        for line in self.lines:
            if line.weeks_left == 0:
                season = int(self.rng.integers(4, 13))
                program = self._new_program(
                    line.category,
                    line.length,
                    days[line.days[0]],
                    series=True,
                    episodes=season * len(line.days),
                )
                line.program, line.weeks_left = program.id, season
            line.weeks_left -= 1

        for channel in self.channels:
            grid = self.home_grid[channel - 1].copy()
            week_programs: list[Program] = []
            for line in self.lines:
                if line.channel == channel:
                    program = self.programs[line.program]
                    week_programs.append(program)
                    for day in line.days:
                        self._air(program, channel, days[day], line.slot)

            _, n_oneshots = self._programs_of(channel)
            for _ in range(n_oneshots):
                category = self._category(channel)
                length = int(self.rng.choice(CATEGORY_SLOTS[category]))
                free = [
                    (day, slot)
                    for day in range(7)
                    for slot in self._free_starts(grid, (day,), length)
                ]
                if not free:
                    raise ScheduleOverflowError(
                        f"channel {channel}, week {week}: no room for a {length}-slot program"
                    )
                day, slot = free[int(self.rng.integers(len(free)))]
                program = self._new_program(category, length, days[day], series=False, episodes=0)
                grid[day, slot : slot + length] = True
                week_programs.append(program)
                self._air(program, channel, days[day], slot)

            self._fill_reruns(channel, grid, days, week_programs)

    def _fill_reruns(
        self,
        channel: ChannelId,
        grid: np.ndarray,
        days: list[datetime],
        programs: list[Program],
    ) -> None:
        """Fill every free gap with reruns of the channel's programs of the week."""
        if not programs:
            return
        slot_seconds = int(SLOT.total_seconds())
        airs = dict.fromkeys((p.id for p in programs), 1)
        for day in range(7):
            slot = 0
            while slot < SLOTS_PER_DAY:
                if grid[day, slot]:
                    slot += 1
                    continue
                gap = 0
                while slot + gap < SLOTS_PER_DAY and not grid[day, slot + gap]:
                    gap += 1
                fitting = [p for p in programs if p.duration // slot_seconds <= gap]
                if not fitting:
                    slot += gap
                    continue
                fewest = min(airs[p.id] for p in fitting)
                choices = [p for p in fitting if airs[p.id] == fewest]
                program = choices[int(self.rng.integers(len(choices)))]
                length = program.duration // slot_seconds
                self._air(program, channel, days[day], slot)
                grid[day, slot : slot + length] = True
                airs[program.id] += 1
                slot += length

    def catalog(self) -> Catalog:
        """Return the schedule with simulcast twins on the high-definition channels."""
        by_program: dict[ProgramId, list[Airing]] = {}
        for airing in sorted(self.airings, key=lambda a: (a.start, a.channel)):
            by_program.setdefault(airing.program, []).append(airing)
        programs = {
            program_id: replace(program, first_broadcast=by_program[program_id][0].start)
            for program_id, program in self.programs.items()
            if program_id in by_program
        }
        self.twins = {twin: base for twin, base in self.twins.items() if base in programs}
        airings = list(self.airings)
        for twin, base in self.twins.items():
            programs[twin] = replace(programs[base], id=twin)
            airings.extend(
                Airing(twin, airing.channel + self.params.n_channels, airing.start, airing.end)
                for airing in by_program[base]
            )
        return Catalog(
            programs=programs,
            airings=tuple(airings),
            channels=frozenset(airing.channel for airing in airings),
        )


class _ScheduleIndex:
    """Standard-definition airings as arrays for fast candidate lookup."""

    def __init__(
        self, catalog: Catalog, twins: dict[ProgramId, ProgramId], n_channels: int
    ) -> None:
        airings = [a for a in catalog.airings if a.channel <= n_channels]
        self.airings = airings
        self.start = np.array([epoch(a.start) for a in airings], dtype=np.int64)
        self.end = np.array([epoch(a.end) for a in airings], dtype=np.int64)
        self.program = np.array([a.program for a in airings], dtype=np.int64)
        self.channel = np.array([a.channel for a in airings], dtype=np.int64)
        codes = {category: code for code, category in enumerate(Category)}
        self.category = np.array(
            [codes[catalog.programs[a.program].category] for a in airings], dtype=np.int64
        )
        self.twin_of = {base: twin for twin, base in twins.items()}
        self.by_channel = {
            channel: np.flatnonzero(self.channel == channel) for channel in range(1, n_channels + 1)
        }
        self.max_length = int((self.end - self.start).max()) if airings else 0

    def live(self, now: int) -> np.ndarray:
        """Return indices of airings on air at ``now``."""
        upper = np.searchsorted(self.start, now, side="right")
        lower = np.searchsorted(self.start, now - self.max_length, side="left")
        window = np.arange(lower, upper)
        return window[self.end[window] > now]

    def catchup(self, now: int) -> np.ndarray:
        """Return the latest finished airing per program of the catch-up window."""
        window_seconds = int(CATCHUP_WINDOW.total_seconds())
        lower = np.searchsorted(self.start, now - window_seconds, side="left")
        upper = np.searchsorted(self.start, now, side="right")
        window = np.arange(lower, upper)
        window = window[self.end[window] <= now][::-1]
        _, first = np.unique(self.program[window], return_index=True)
        return np.sort(window[first])


class _Viewer:
    """Samples the sessions of one user from their profile."""

    def __init__(
        self,
        params: SynthParams,
        profile: UserProfile,
        index: _ScheduleIndex,
        quality: dict[ProgramId, float],
        rng: np.random.Generator,
    ) -> None:
        self.params = params
        self.profile = profile
        self.index = index
        self.quality = quality
        self.rng = rng
        self.affinity = np.array(profile.category_affinity)
        self.watched: dict[ProgramId, int] = {}
        self.events: list[ViewEvent] = []

    def _choose(self, candidates: np.ndarray) -> int | None:
        """Return the chosen airing index, None when nothing fits the habit."""
        index, profile = self.index, self.profile
        if self.rng.random() < self.params.channel_loyalty:
            candidates = candidates[index.channel[candidates] == profile.home_channel]
        if not len(candidates):
            return None
        if self.watched and self.rng.random() < self.params.series_repeat_prob:
            seen = np.array([index.program[c] in self.watched for c in candidates])
            if seen.any():
                candidates = candidates[seen]
        weights = self.affinity[index.category[candidates]] * np.array(
            [self.quality[int(index.program[c])] for c in candidates]
        )
        weights *= 1.0 + _FAVORITE_CHANNEL_BOOST * np.isin(
            index.channel[candidates], profile.favorite_channels
        )
        total = weights.sum()
        if total <= 0:
            return int(candidates[self.rng.integers(len(candidates))])
        return int(candidates[self.rng.choice(len(candidates), p=weights / total)])

    def _engaged(self, program: ProgramId, category: int) -> bool:
        if program in self.watched:
            chance = 0.9
        else:
            chance = 0.3 + 0.55 * self.affinity[category] / self.affinity.max()
        return bool(self.rng.random() < chance)

    def _record(self, airing: int, moment: int, seconds: int, mode: ViewMode) -> None:
        index = self.index
        program = int(index.program[airing])
        channel = int(index.channel[airing])
        if (
            (twin := index.twin_of.get(program)) is not None
            and channel != self.profile.home_channel
            and self.rng.random() < _TWIN_SWITCH_PROB
        ):
            program, channel = twin, channel + self.params.n_channels
        self.events.append(
            ViewEvent(self.profile.user, program, channel, from_epoch(moment), seconds, mode)
        )

    def _remember(self, airing: int, seconds: int) -> None:
        duration = self.index.end[airing] - self.index.start[airing]
        if seconds * 2 > duration:
            program = int(self.index.program[airing])
            self.watched[program] = self.watched.get(program, 0) + 1

    def live_session(self, now: int, day_end: int) -> None:
        """Watch live from ``now``, zapping or staying for the next program."""
        for _ in range(_MAX_VIEWS_PER_SESSION):
            if now >= day_end or (airing := self._choose(self.index.live(now))) is None:
                return
            remaining = int(self.index.end[airing]) - now
            engaged = self._engaged(
                int(self.index.program[airing]), int(self.index.category[airing])
            )
            share = self.rng.uniform(0.85, 1.0) if engaged else self.rng.uniform(0.02, 0.3)
            seconds = max(1, int(remaining * share))
            self._record(airing, now, seconds, ViewMode.LIVE)
            self._remember(airing, seconds)
            if self.rng.random() >= _CONTINUE_PROB:
                return
            now = int(self.index.end[airing]) if engaged else now + seconds + 60

    def catchup_session(self, now: int) -> None:
        """Watch recorded programs back to back."""
        for _ in range(_MAX_VIEWS_PER_SESSION - 1):
            if (airing := self._choose(self.index.catchup(now))) is None:
                return
            duration = int(self.index.end[airing] - self.index.start[airing])
            engaged = self._engaged(
                int(self.index.program[airing]), int(self.index.category[airing])
            )
            share = self.rng.uniform(0.8, 1.0) if engaged else self.rng.uniform(0.02, 0.3)
            seconds = max(1, int(duration * share))
            self._record(airing, now, seconds, ViewMode.CATCHUP)
            self._remember(airing, seconds)
            if self.rng.random() >= _CONTINUE_PROB:
                return
            now += seconds + 120

    def run(self, weeks: int) -> list[ViewEvent]:
        """Sample every session of the simulated weeks."""
        parts = list(_DAYPART_HOURS)
        for week in range(weeks):
            for _ in range(int(self.rng.poisson(self.profile.sessions_per_week))):
                day = SCHEDULE_START + timedelta(weeks=week, days=int(self.rng.integers(7)))
                if self.rng.random() < self.params.daypart_regularity:
                    part = self.profile.daypart
                else:
                    part = parts[int(self.rng.integers(len(parts)))]
                first_hour, last_hour = _DAYPART_HOURS[part]
                hour = int(self.rng.integers(first_hour, last_hour))
                # sessions favor program starts on the half hour
                minute = int(self.rng.choice((0, 30))) + int(self.rng.integers(0, 5))
                now = epoch(day + timedelta(hours=hour, minutes=minute))
                if self.rng.random() < self.profile.catchup_share:
                    self.catchup_session(now)
                else:
                    self.live_session(now, epoch(day + timedelta(days=1)))
        return self.events


def _profile(params: SynthParams, user: UserId, rng: np.random.Generator) -> UserProfile:
    channels = np.arange(1, params.n_channels + 1)
    home = int(rng.choice(channels))
    others = channels[channels != home]
    favorites = rng.choice(others, min(2, len(others)), replace=False) if len(others) else []
    affinity = rng.dirichlet(np.full(len(Category), params.category_affinity_concentration))
    if 0 < params.catchup_share < 1:
        share = float(rng.beta(10 * params.catchup_share, 10 * (1 - params.catchup_share)))
    else:
        share = params.catchup_share
    return UserProfile(
        user=user,
        home_channel=home,
        favorite_channels=(home, *(int(c) for c in favorites)),
        category_affinity=tuple(float(a) for a in affinity),
        daypart=list(_DAYPART_HOURS)[int(rng.choice(3, p=_DAYPART_PRIOR))],
        sessions_per_week=float(rng.gamma(4.0, params.sessions_per_week / 4.0)),
        catchup_share=share,
    )


def synthesize(params: SynthParams | None = None) -> SynthData:
    """Generate a schedule and a viewing log in memory."""
    params = params or SynthParams()
    schedule_rng = np.random.default_rng(derive_seed(params.seed, _SEED_SCHEDULE))
    builder = _ScheduleBuilder(params, schedule_rng)
    builder.plan_lines()
    for week in range(params.n_weeks):
        builder.build_week(week)
    catalog = builder.catalog()
    _LOGGER.info(
        "Scheduled %s programs in %s airings on %s channels over %s weeks",
        len(catalog),
        len(catalog.airings),
        len(catalog.channels),
        params.n_weeks,
    )

    quality_rng = np.random.default_rng(derive_seed(params.seed, _SEED_SCHEDULE, 1))
    quality = {
        program_id: float(quality_rng.lognormal(0.0, 0.5))
        for program_id in sorted(builder.programs)
    }
    index = _ScheduleIndex(catalog, builder.twins, params.n_channels)
    events: list[ViewEvent] = []
    profiles: list[UserProfile] = []
    for user in range(1, params.n_users + 1):
        rng = np.random.default_rng(derive_seed(params.seed, _SEED_USERS, user))
        profile = _profile(params, user, rng)
        profiles.append(profile)
        events.extend(_Viewer(params, profile, index, quality, rng).run(params.n_weeks))
    _LOGGER.info("Sampled %s view events for %s users", len(events), params.n_users)
    return SynthData(params, catalog, events, profiles, builder.twins)


def generate(params: SynthParams, directory: Path | str) -> tuple[Path, Path, Path]:
    """Write the EPG, view log and manifest of a synthetic dataset."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    data = synthesize(params)
    epg, views, manifest = directory / EPG_FILE, directory / VIEWS_FILE, directory / MANIFEST_FILE
    write_epg(epg, data.catalog)
    write_views(views, data.events)
    manifest.write_text(
        json.dumps(data.manifest(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    _LOGGER.info("%s: Wrote synthetic dataset (seed %s)", directory, params.seed)
    return epg, views, manifest
