"""tvrank ingestion: EPG and view-log files, simulcast merging, labeled interactions."""

from __future__ import annotations

from collections import defaultdict
from collections.abc import Iterable, Sequence
import csv
from dataclasses import dataclass, field, replace
from datetime import datetime
from functools import cached_property
import json
import logging
from pathlib import Path
from typing import Any, NamedTuple

from dateutil.parser import isoparse
import numpy as np

from .const import CATCHUP_WINDOW, SIMULCAST_MIN_OVERLAP, Category, FeedbackSource, ViewMode
from .domain import (
    Airing,
    ChannelId,
    PreferenceRule,
    Program,
    ProgramId,
    UserId,
    ViewEvent,
    preference_label,
    watched_share,
)
from .exceptions import FormatError, LookupFailure
from .helpers import as_utc, epoch, tokenize, week_origin

_LOGGER = logging.getLogger(__name__)

EPG_COLUMNS = (
    "program_id",
    "title",
    "description",
    "actors",
    "directors",
    "category",
    "subcategory",
    "is_series",
    "episode_count",
    "duration_s",
    "channel_id",
    "start_utc",
    "end_utc",
)
VIEW_KEYS = ("user", "program", "channel", "watch_start", "watched_s", "mode")
LIST_SEPARATOR = "|"

_TRUE = {"1", "true", "yes"}
_FALSE = {"0", "false", "no"}
_CATCHUP_SECONDS = int(CATCHUP_WINDOW.total_seconds())


@dataclass(frozen=True)
class Catalog:
    """Programs, their airings and the channels they air on."""

    programs: dict[ProgramId, Program]
    airings: tuple[Airing, ...]
    channels: frozenset[ChannelId]
    aliases: dict[ProgramId, ProgramId] = field(default_factory=dict)

    def __post_init__(self) -> None:
        """Validate references and sort airings by start time."""
        for airing in self.airings:
            if airing.program not in self.programs:
                raise LookupFailure(f"Airing references unknown program {airing.program}")
        ordered = tuple(sorted(self.airings, key=lambda a: (a.start, a.channel, a.program)))
        object.__setattr__(self, "airings", ordered)

    def __len__(self) -> int:
        """Return the number of programs."""
        return len(self.programs)

    def canonical(self, program_id: ProgramId) -> ProgramId:
        """Return the canonical id of a (possibly merged) program."""
        return self.aliases.get(program_id, program_id)

    def program(self, program_id: ProgramId) -> Program:
        """Return a program by (possibly merged) id."""
        try:
            return self.programs[self.canonical(program_id)]
        except KeyError:
            raise LookupFailure(f"Unknown program {program_id}") from None

    @cached_property
    def program_ids(self) -> np.ndarray:
        """Return all program ids in ascending order."""
        return np.array(sorted(self.programs), dtype=np.int64)

    @cached_property
    def program_index(self) -> dict[ProgramId, int]:
        """Return the dense index of every program id."""
        return {int(pid): index for index, pid in enumerate(self.program_ids)}

    @cached_property
    def channel_ids(self) -> np.ndarray:
        """Return all channel ids in ascending order."""
        return np.array(sorted(self.channels), dtype=np.int64)

    @cached_property
    def channel_index(self) -> dict[ChannelId, int]:
        """Return the dense index of every channel id."""
        return {int(cid): index for index, cid in enumerate(self.channel_ids)}

    @cached_property
    def subcategories(self) -> tuple[str, ...]:
        """Return the subcategory vocabulary."""
        return tuple(sorted({program.subcategory for program in self.programs.values()}))

    @cached_property
    def arrays(self) -> CatalogArrays:
        """Return columnar program and airing attributes."""
        return CatalogArrays.build(self)

    @cached_property
    def airings_by_program(self) -> dict[ProgramId, tuple[Airing, ...]]:
        """Return the airings of each program, by start time."""
        grouped: dict[ProgramId, list[Airing]] = defaultdict(list)
        for airing in self.airings:
            grouped[airing.program].append(airing)
        return {program_id: tuple(airings) for program_id, airings in grouped.items()}

    @property
    def first_start(self) -> datetime | None:
        """Return the start of the earliest airing."""
        return self.airings[0].start if self.airings else None

    def find_airing(
        self, program_id: ProgramId, channel: ChannelId, moment: datetime, mode: ViewMode
    ) -> Airing | None:
        """Return the airing a view at ``moment`` is attributed to."""
        match = None
        for airing in self.airings_by_program.get(self.canonical(program_id), ()):
            if airing.start > moment:
                break
            if airing.channel == channel and airing.is_available(moment, mode):
                # latest qualifying airing wins for catch-up
                match = airing
        return match

    def live_candidates(self, moment: datetime) -> list[Airing]:
        """Return one airing per program being broadcast at ``moment``."""
        arrays = self.arrays
        now = epoch(moment)
        upper = np.searchsorted(arrays.airing_start, now, side="right")
        hits = np.flatnonzero(arrays.airing_end[:upper] > now)
        return self._unique_programs(hits, latest=False)

    def catchup_candidates(self, moment: datetime) -> list[Airing]:
        """Return one airing per program broadcast in the catch-up window before ``moment``."""
        arrays = self.arrays
        now = epoch(moment)
        upper = np.searchsorted(arrays.airing_start, now, side="right")
        hits = np.flatnonzero(arrays.airing_end[:upper] >= now - _CATCHUP_SECONDS)
        return self._unique_programs(hits, latest=True)

    def aired_between(self, start: datetime, end: datetime) -> list[Airing]:
        """Return one airing per program starting in ``[start, end)``."""
        arrays = self.arrays
        lower = np.searchsorted(arrays.airing_start, epoch(start), side="left")
        upper = np.searchsorted(arrays.airing_start, epoch(end), side="left")
        return self._unique_programs(np.arange(lower, upper), latest=True)

    def _unique_programs(self, hits: np.ndarray, latest: bool) -> list[Airing]:
        """Collapse airing indices to one airing per program, ordered by program id."""
        chosen: dict[ProgramId, Airing] = {}
        for index in hits:
            airing = self.airings[index]
            current = chosen.get(airing.program)
            if current is None:
                chosen[airing.program] = airing
            elif latest and airing.start > current.start:
                chosen[airing.program] = airing
            elif not latest and airing.channel < current.channel:
                chosen[airing.program] = airing
        return [chosen[program_id] for program_id in sorted(chosen)]


@dataclass(frozen=True)
class CatalogArrays:
    """Columnar catalog attributes indexed by dense program / airing index."""

    category: np.ndarray
    subcategory: np.ndarray
    is_series: np.ndarray
    episode_count: np.ndarray
    duration: np.ndarray
    first_broadcast: np.ndarray
    title_tokens: tuple[frozenset[str], ...]
    airing_start: np.ndarray
    airing_end: np.ndarray
    airing_program: np.ndarray
    airing_channel: np.ndarray

    @classmethod
    def build(cls, catalog: Catalog) -> CatalogArrays:
        """Build the columns of a catalog."""
        programs = [catalog.programs[int(pid)] for pid in catalog.program_ids]
        sub_codes = {name: code for code, name in enumerate(catalog.subcategories)}
        return cls(
            category=np.array([p.category.code for p in programs], dtype=np.int64),
            subcategory=np.array([sub_codes[p.subcategory] for p in programs], dtype=np.int64),
            is_series=np.array([p.is_series for p in programs], dtype=np.float64),
            episode_count=np.array([p.episode_count for p in programs], dtype=np.float64),
            duration=np.array([p.duration for p in programs], dtype=np.float64),
            first_broadcast=np.array([epoch(p.first_broadcast) for p in programs], dtype=np.int64),
            title_tokens=tuple(frozenset(tokenize(p.title)) for p in programs),
            airing_start=np.array([epoch(a.start) for a in catalog.airings], dtype=np.int64),
            airing_end=np.array([epoch(a.end) for a in catalog.airings], dtype=np.int64),
            airing_program=np.array(
                [catalog.program_index[a.program] for a in catalog.airings], dtype=np.int64
            ),
            airing_channel=np.array(
                [catalog.channel_index[a.channel] for a in catalog.airings], dtype=np.int64
            ),
        )


def _parse_bool(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in _TRUE:
        return True
    if lowered in _FALSE:
        return False
    raise ValueError(f"Invalid boolean: {value!r}")


def _parse_time(value: str) -> datetime:
    return as_utc(isoparse(value.strip()))


def _split_list(value: str) -> tuple[str, ...]:
    return tuple(item.strip() for item in value.split(LIST_SEPARATOR) if item.strip())


def parse_epg(path: Path | str) -> Catalog:
    """Parse an EPG CSV file into a catalog."""
    path = Path(path)
    programs: dict[ProgramId, Program] = {}
    airings: list[Airing] = []
    first_seen: dict[ProgramId, datetime] = {}
    with path.open(newline="", encoding="utf-8") as file:
        reader = csv.DictReader(file)
        if reader.fieldnames is None:
            raise FormatError("missing header", path, 1)
        if missing := [column for column in EPG_COLUMNS if column not in reader.fieldnames]:
            raise FormatError(f"missing required column(s): {', '.join(missing)}", path, 1)
        for row in reader:
            line = reader.line_num
            try:
                category = Category.parse(row["category"])
            except ValueError:
                raise FormatError(f"unknown category {row['category']!r}", path, line) from None
            try:
                program_id = int(row["program_id"])
                start = _parse_time(row["start_utc"])
                airing = Airing(
                    program=program_id,
                    channel=int(row["channel_id"]),
                    start=start,
                    end=_parse_time(row["end_utc"]),
                )
                if program_id not in programs:
                    programs[program_id] = Program(
                        id=program_id,
                        title=row["title"],
                        description=row["description"],
                        actors=_split_list(row["actors"]),
                        directors=_split_list(row["directors"]),
                        category=category,
                        subcategory=row["subcategory"],
                        is_series=_parse_bool(row["is_series"]),
                        episode_count=int(row["episode_count"]),
                        duration=int(row["duration_s"]),
                        first_broadcast=start,
                    )
            except (TypeError, ValueError) as ex:
                raise FormatError(str(ex), path, line) from ex
            airings.append(airing)
            if program_id not in first_seen or start < first_seen[program_id]:
                first_seen[program_id] = start

    for program_id, start in first_seen.items():
        if programs[program_id].first_broadcast != start:
            programs[program_id] = replace(programs[program_id], first_broadcast=start)

    catalog = Catalog(
        programs=programs,
        airings=tuple(airings),
        channels=frozenset(airing.channel for airing in airings),
    )
    _LOGGER.info(
        "%s: Parsed %s programs, %s airings on %s channels",
        path,
        len(programs),
        len(airings),
        len(catalog.channels),
    )
    return catalog


def _overlap(first: Airing, second: Airing) -> float:
    """Return the shared time of two airings relative to the longer one."""
    shared = (min(first.end, second.end) - max(first.start, second.start)).total_seconds()
    longest = max(
        (first.end - first.start).total_seconds(), (second.end - second.start).total_seconds()
    )
    return max(0.0, shared) / longest


def merge_simulcasts(catalog: Catalog) -> Catalog:
    """Merge programs broadcast simultaneously under one canonical program id."""
    parent = {program_id: program_id for program_id in catalog.programs}

    def find(program_id: ProgramId) -> ProgramId:
        while parent[program_id] != program_id:
            parent[program_id] = parent[parent[program_id]]
            program_id = parent[program_id]
        return program_id

    def union(first: ProgramId, second: ProgramId) -> None:
        root_first, root_second = find(first), find(second)
        if root_first != root_second:
            low, high = sorted((root_first, root_second))
            parent[high] = low

    by_title: dict[str, list[Airing]] = defaultdict(list)
    for airing in catalog.airings:
        by_title[catalog.programs[airing.program].title].append(airing)

    for airings in by_title.values():
        # airings are start-ordered, so later ones cannot overlap once start passes end
        for index, first in enumerate(airings):
            for second in airings[index + 1 :]:
                if second.start >= first.end:
                    break
                if (
                    second.program != first.program
                    and _overlap(first, second) >= SIMULCAST_MIN_OVERLAP
                ):
                    union(first.program, second.program)

    mapping = {program_id: find(program_id) for program_id in catalog.programs}
    merged = sum(1 for program_id, root in mapping.items() if program_id != root)
    if not merged:
        return catalog

    programs: dict[ProgramId, Program] = {}
    for program_id, root in sorted(mapping.items()):
        candidate = catalog.programs[program_id]
        if root not in programs:
            programs[root] = catalog.programs[root]
        if candidate.first_broadcast < programs[root].first_broadcast:
            programs[root] = replace(programs[root], first_broadcast=candidate.first_broadcast)

    airings = {
        replace(airing, program=mapping[airing.program]) for airing in catalog.airings
    }
    aliases = {alias: mapping[root] for alias, root in catalog.aliases.items()}
    aliases.update(
        {program_id: root for program_id, root in mapping.items() if program_id != root}
    )
    _LOGGER.info("Merged %s simulcast program(s)", merged)
    return Catalog(
        programs=programs,
        airings=tuple(airings),
        channels=catalog.channels,
        aliases=aliases,
    )


@dataclass(frozen=True)
class ViewLog:
    """Viewing events sorted by (user, watch_start)."""

    events: tuple[ViewEvent, ...]
    dropped: int = 0

    def __post_init__(self) -> None:
        """Sort the events."""
        ordered = tuple(
            sorted(self.events, key=lambda e: (e.user, e.watch_start, e.program, e.channel))
        )
        object.__setattr__(self, "events", ordered)

    def __len__(self) -> int:
        """Return the number of events."""
        return len(self.events)

    @cached_property
    def users(self) -> tuple[UserId, ...]:
        """Return the distinct users in ascending order."""
        return tuple(sorted({event.user for event in self.events}))

    @property
    def first_start(self) -> datetime | None:
        """Return the earliest watch start."""
        return min((event.watch_start for event in self.events), default=None)

    def filter(self, feedback: FeedbackSource) -> ViewLog:
        """Return the events usable as feedback from ``feedback``."""
        if feedback is FeedbackSource.LIVE_AND_CATCHUP:
            return self
        return ViewLog(
            tuple(event for event in self.events if event.mode is ViewMode.CATCHUP),
            self.dropped,
        )


def parse_views(path: Path | str, catalog: Catalog) -> ViewLog:
    """Parse a JSONL view log, remapping merged programs to their canonical id."""
    path = Path(path)
    events: list[ViewEvent] = []
    unresolved = unavailable = 0
    with path.open(encoding="utf-8") as file:
        for line, text in enumerate(file, start=1):
            if not text.strip():
                continue
            try:
                record: dict[str, Any] = json.loads(text)
                event = ViewEvent(
                    user=int(record["user"]),
                    program=int(record["program"]),
                    channel=int(record["channel"]),
                    watch_start=_parse_time(record["watch_start"]),
                    watched_seconds=float(record["watched_s"]),
                    mode=ViewMode(record["mode"]),
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as ex:
                raise FormatError(f"malformed view record: {ex}", path, line) from ex

            program_id = catalog.canonical(event.program)
            if program_id not in catalog.programs or event.channel not in catalog.channels:
                unresolved += 1
                continue
            airing = catalog.find_airing(program_id, event.channel, event.watch_start, event.mode)
            if airing is None:
                unavailable += 1
                continue
            if program_id != event.program:
                event = replace(event, program=program_id)
            events.append(event)

    if unresolved or unavailable:
        _LOGGER.warning(
            "%s: Dropped %s unresolvable and %s unavailable view(s)",
            path,
            unresolved,
            unavailable,
        )
    _LOGGER.info("%s: Parsed %s view events", path, len(events))
    return ViewLog(tuple(events), dropped=unresolved + unavailable)


def write_epg(path: Path | str, catalog: Catalog) -> None:
    """Write a catalog in the EPG CSV format."""
    with Path(path).open("w", newline="", encoding="utf-8") as file:
        writer = csv.writer(file, lineterminator="\n")
        writer.writerow(EPG_COLUMNS)
        for airing in catalog.airings:
            program = catalog.programs[airing.program]
            writer.writerow(
                (
                    program.id,
                    program.title,
                    program.description,
                    LIST_SEPARATOR.join(program.actors),
                    LIST_SEPARATOR.join(program.directors),
                    program.category.value,
                    program.subcategory,
                    "true" if program.is_series else "false",
                    program.episode_count,
                    program.duration,
                    airing.channel,
                    airing.start.isoformat().replace("+00:00", "Z"),
                    airing.end.isoformat().replace("+00:00", "Z"),
                )
            )


def write_views(path: Path | str, events: Iterable[ViewEvent]) -> None:
    """Write view events in the JSONL view-log format."""
    with Path(path).open("w", encoding="utf-8") as file:
        for event in events:
            record = {
                "user": event.user,
                "program": event.program,
                "channel": event.channel,
                "watch_start": event.watch_start.isoformat().replace("+00:00", "Z"),
                "watched_s": round(event.watched_seconds, 3),
                "mode": event.mode.value,
            }
            file.write(json.dumps(record, sort_keys=True) + "\n")


class Interaction(NamedTuple):
    """One labeled (user, program, week) record."""

    user: UserId
    program: ProgramId
    preference: int
    week: int
    watched_seconds: float = 0.0
    views: int = 0


@dataclass(frozen=True)
class DailyViews:
    """Views accumulated per (user, program, airing day, week), as columns.

    Partial views of the same broadcast day are summed before labeling; a
    group never spans a week boundary so windows only see their own events.
    """

    user: np.ndarray
    user_idx: np.ndarray
    program: np.ndarray
    program_idx: np.ndarray
    channel_idx: np.ndarray
    airing_start: np.ndarray
    week: np.ndarray
    seconds: np.ndarray
    fraction: np.ndarray
    preference: np.ndarray
    first_watch: np.ndarray
    last_watch: np.ndarray
    catchup: np.ndarray

    def __len__(self) -> int:
        """Return the number of records."""
        return len(self.user)

    def select(self, mask: np.ndarray) -> DailyViews:
        """Return the records where ``mask`` is true."""
        return DailyViews(**{name: getattr(self, name)[mask] for name in self.__dataclass_fields__})

    def in_weeks(self, first: int, last: int) -> DailyViews:
        """Return the records of weeks ``first`` through ``last`` inclusive."""
        return self.select((self.week >= first) & (self.week <= last))

    def positives(self) -> set[tuple[UserId, ProgramId, int]]:
        """Return (user, program, airing start) triples labeled 1."""
        mask = self.preference == 1
        return set(
            zip(
                self.user[mask].tolist(),
                self.program[mask].tolist(),
                self.airing_start[mask].tolist(),
                strict=True,
            )
        )


def accumulate_daily(
    log: ViewLog,
    catalog: Catalog,
    rule: PreferenceRule,
    origin: datetime,
    users: Sequence[UserId] | None = None,
) -> DailyViews:
    """Sum partial views per (user, program, airing day, week) and label them."""
    user_index = {user: index for index, user in enumerate(users or log.users)}
    origin_epoch = epoch(origin)
    groups: dict[tuple[int, int, int, int], list[Any]] = {}
    for event in log.events:
        airing = catalog.find_airing(event.program, event.channel, event.watch_start, event.mode)
        if airing is None:
            continue
        start = epoch(airing.start)
        watched = epoch(event.watch_start)
        day = (start - origin_epoch) // 86400
        week = (watched - origin_epoch) // (7 * 86400)
        key = (event.user, airing.program, day, week)
        if (group := groups.get(key)) is None:
            channel = catalog.channel_index[airing.channel]
            groups[key] = [channel, start, 0.0, watched, watched, False]
            group = groups[key]
        group[2] += event.watched_seconds
        group[3] = min(group[3], watched)
        group[4] = max(group[4], watched)
        group[5] = group[5] or event.mode is ViewMode.CATCHUP

    rows = sorted(groups.items())
    fractions, preferences = [], []
    for (user, program_id, _, _), (_, _, seconds, *_) in rows:
        fraction = watched_share(seconds, catalog.programs[program_id])
        fractions.append(fraction)
        preferences.append(preference_label(fraction, seconds, rule))

    def column(values: list[Any], dtype: Any) -> np.ndarray:
        return np.array(values, dtype=dtype)

    return DailyViews(
        user=column([key[0] for key, _ in rows], np.int64),
        user_idx=column([user_index[key[0]] for key, _ in rows], np.int64),
        program=column([key[1] for key, _ in rows], np.int64),
        program_idx=column([catalog.program_index[key[1]] for key, _ in rows], np.int64),
        channel_idx=column([value[0] for _, value in rows], np.int64),
        airing_start=column([value[1] for _, value in rows], np.int64),
        week=column([key[3] for key, _ in rows], np.int64),
        seconds=column([value[2] for _, value in rows], np.float64),
        fraction=column(fractions, np.float64),
        preference=column(preferences, np.int64),
        first_watch=column([value[3] for _, value in rows], np.int64),
        last_watch=column([value[4] for _, value in rows], np.int64),
        catchup=column([value[5] for _, value in rows], bool),
    )


def build_interactions(
    log: ViewLog, catalog: Catalog, rule: PreferenceRule, origin: datetime | None = None
) -> list[Interaction]:
    """Return one labeled record per (user, program, week)."""
    if origin is None:
        origin = dataset_origin(catalog, log)
    daily = accumulate_daily(log, catalog, rule, origin)
    weekly: dict[tuple[int, int, int], list[float]] = {}
    for user, program_id, week, seconds, preference in zip(
        daily.user.tolist(),
        daily.program.tolist(),
        daily.week.tolist(),
        daily.seconds.tolist(),
        daily.preference.tolist(),
        strict=True,
    ):
        record = weekly.setdefault((user, program_id, week), [0, 0.0, 0])
        record[0] = max(record[0], preference)
        record[1] += seconds
        record[2] += 1
    return [
        Interaction(user, program_id, int(preference), week, seconds, int(views))
        for (user, program_id, week), (preference, seconds, views) in sorted(weekly.items())
    ]


def dataset_origin(catalog: Catalog, log: ViewLog) -> datetime:
    """Return the Monday starting week 0 of a dataset."""
    starts = [moment for moment in (catalog.first_start, log.first_start) if moment is not None]
    if not starts:
        raise ValueError("Cannot compute the week origin of an empty dataset")
    return week_origin(min(starts))


@dataclass(frozen=True)
class Dataset:
    """A merged catalog with its view log and week calendar."""

    catalog: Catalog
    log: ViewLog
    origin: datetime
    _daily: dict[tuple[str, FeedbackSource], DailyViews] = field(
        default_factory=dict, compare=False, repr=False
    )

    @classmethod
    def load(cls, epg: Path | str, views: Path | str) -> Dataset:
        """Parse, merge and index an EPG file and a view log."""
        catalog = merge_simulcasts(parse_epg(epg))
        log = parse_views(views, catalog)
        return cls(catalog, log, dataset_origin(catalog, log))

    @property
    def users(self) -> tuple[UserId, ...]:
        """Return every user in the dataset."""
        return self.log.users

    @cached_property
    def user_index(self) -> dict[UserId, int]:
        """Return the dense index of every user."""
        return {user: index for index, user in enumerate(self.users)}

    @property
    def n_weeks(self) -> int:
        """Return the number of weeks spanned by the view log."""
        if not self.log.events:
            return 0
        last = max(event.watch_start for event in self.log.events)
        return int((epoch(last) - epoch(self.origin)) // (7 * 86400)) + 1

    def daily(self, rule: PreferenceRule, feedback: FeedbackSource) -> DailyViews:
        """Return the labeled daily views available from a feedback source."""
        key = (str(rule), feedback)
        if key not in self._daily:
            self._daily[key] = accumulate_daily(
                self.log.filter(feedback), self.catalog, rule, self.origin, self.users
            )
        return self._daily[key]


@dataclass(frozen=True)
class DatasetSummary:
    """Counts describing a dataset."""

    users: int
    programs: int
    airings: int
    channels: int
    events: int
    dropped: int
    weeks: int
    quadruples: int
    positives: int
    programs_per_user: float
    users_per_program: float

    def as_dict(self) -> dict[str, Any]:
        """Return the summary as a plain dict."""
        return {name: getattr(self, name) for name in self.__dataclass_fields__}


def summarize(dataset: Dataset, rule: PreferenceRule) -> DatasetSummary:
    """Return summary counts of a dataset."""
    interactions = build_interactions(dataset.log, dataset.catalog, rule, dataset.origin)
    watched = {(record.user, record.program) for record in interactions if record.preference}
    per_user: dict[UserId, int] = defaultdict(int)
    per_program: dict[ProgramId, int] = defaultdict(int)
    for user, program_id in watched:
        per_user[user] += 1
        per_program[program_id] += 1
    return DatasetSummary(
        users=len(dataset.users),
        programs=len(dataset.catalog),
        airings=len(dataset.catalog.airings),
        channels=len(dataset.catalog.channels),
        events=len(dataset.log),
        dropped=dataset.log.dropped,
        weeks=dataset.n_weeks,
        quadruples=len(interactions),
        positives=sum(record.preference for record in interactions),
        programs_per_user=float(np.mean(list(per_user.values()))) if per_user else 0.0,
        users_per_program=float(np.mean(list(per_program.values()))) if per_program else 0.0,
    )


__all__ = [
    "Catalog",
    "CatalogArrays",
    "DailyViews",
    "Dataset",
    "DatasetSummary",
    "Interaction",
    "ViewLog",
    "accumulate_daily",
    "build_interactions",
    "dataset_origin",
    "merge_simulcasts",
    "parse_epg",
    "parse_views",
    "summarize",
    "write_epg",
    "write_views",
]
