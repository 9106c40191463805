"""tvrank constants."""

from __future__ import annotations

from datetime import timedelta
from enum import IntEnum, StrEnum


class Category(StrEnum):
    """Program category."""

    NEWS = "News"
    TV_SERIES = "TVSeries"
    ENTERTAINMENT = "Entertainment"
    KIDS = "Kids"
    DOCUMENTARIES = "Documentaries"
    SPORTS = "Sports"
    MOVIES = "Movies"
    ADULTS = "Adults"

    @property
    def code(self) -> int:
        """Return the dense integer code of the category."""
        return CATEGORY_CODES[self]

    @classmethod
    def parse(cls, value: str) -> Category:
        """Parse a category literal, accepting the spaced form ("TV Series")."""
        return cls(value.replace(" ", ""))


CATEGORY_CODES = {category: code for code, category in enumerate(Category)}


class ViewMode(StrEnum):
    """How a program was watched."""

    LIVE = "live"
    """During its scheduled broadcast"""
    CATCHUP = "catchup"
    """Time-shifted, within the availability window after broadcast"""


class DayPart(IntEnum):
    """Period of the day."""

    NIGHT = 0  # 00-06
    MORNING = 1  # 06-12
    AFTERNOON = 2  # 12-18
    EVENING = 3  # 18-24


class ScenarioKind(StrEnum):
    """Which candidate set a recommendation is generated from."""

    LIVE_TV = "live"
    """Programs being broadcast at the session time"""
    CATCH_UP = "catchup"
    """Programs broadcast in the last 7 days"""


class FeedbackSource(StrEnum):
    """Which views are available to learn from."""

    LIVE_AND_CATCHUP = "live+catchup"
    CATCHUP_ONLY = "catchup"


class AccuracySource(StrEnum):
    """Relevance used by the accuracy term of the re-ranking objective."""

    MODEL_SCORE = "model"
    """Model scores min-max normalized within the candidate set"""
    GROUND_TRUTH = "truth"
    """Binary judgments, for offline reporting only"""


class Algorithm(StrEnum):
    """Compared recommendation algorithms."""

    RANDOM = "random"
    POPULAR = "popular"
    USER_POPULAR = "user_popular"
    WRMF = "wrmf"
    CONTENT_BASED = "content_based"
    L2R = "l2r"
    GREEDY_REC = "greedy_rec"


ALGORITHM_LABELS = {
    Algorithm.RANDOM: "Random",
    Algorithm.POPULAR: "Popular",
    Algorithm.USER_POPULAR: "UserPopular",
    Algorithm.WRMF: "WRMF",
    Algorithm.CONTENT_BASED: "Content-based",
    Algorithm.L2R: "L2R",
    Algorithm.GREEDY_REC: "GreedyRec",
}

CATCHUP_WINDOW = timedelta(days=7)
SESSION_GAP = timedelta(minutes=30)
SIMULCAST_MIN_OVERLAP = 0.9

FOLD_WEEKS = 6
HISTORY_WEEKS = 4
DEFAULT_TOTAL_WEEKS = 10
RECENT_WEEKS = (1, 2)

DEFAULT_K_VALUES = (5, 10)
DEFAULT_OBJECTIVE = (0.5, 0.25, 0.25, 0.0)
DEFAULT_PREFERENCE_RULE = "fraction:0.5"
DEFAULT_MAX_SESSIONS_PER_USER = 5
DEFAULT_TRAIN_NEGATIVES = 30
DEFAULT_SEED = 7

# WRMF (alternating least squares)
WRMF_FACTORS = 32
WRMF_ALPHA = 40.0
WRMF_REGULARIZATION = 0.1
WRMF_ITERATIONS = 15
WRMF_INIT_SCALE = 0.1

# FunkSVD-style SGD factorization, used as a feature signal
FUNK_FACTORS = 16
FUNK_LEARNING_RATE = 0.01
FUNK_REGULARIZATION = 0.02
FUNK_EPOCHS = 20

# LambdaMART
LTR_ROUNDS = 100
LTR_LEARNING_RATE = 0.1
LTR_MAX_LEAVES = 10
LTR_MIN_SAMPLES_LEAF = 50
LTR_TRUNCATION = 10
LTR_SIGMA = 1.0
LTR_VALIDATION_SHARE = 0.2
LTR_HESSIAN_EPSILON = 1e-9

OUTPUT_DIR_ENV = "TVRANK_OUTPUT_DIR"
