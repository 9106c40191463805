"""tvrank exceptions."""

from __future__ import annotations

from pathlib import Path


class TvRankError(Exception):
    """Base class for tvrank errors."""


class FormatError(TvRankError):
    """An input file does not follow its documented format."""

    def __init__(
        self, message: str, path: Path | str | None = None, line: int | None = None
    ) -> None:
        """Initialize the error with the offending location."""
        self.path = Path(path) if path is not None else None
        self.line = line
        location = ""
        if path is not None:
            location = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(f"{location}{message}")


class LookupFailure(TvRankError, KeyError):
    """An identifier does not resolve."""

    def __str__(self) -> str:
        """Return the plain message instead of KeyError's repr."""
        return str(self.args[0]) if self.args else ""


class ConfigError(TvRankError):
    """The run configuration is invalid."""


class TrainingError(TvRankError):
    """A model could not be trained or applied."""


class ScheduleOverflowError(TvRankError):
    """Synthetic programs do not fit into the broadcast week."""
