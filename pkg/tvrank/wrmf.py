"""tvrank WRMF: weighted regularized matrix factorization by alternating least squares."""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import asdict, dataclass, field
import json
import logging
from pathlib import Path
from typing import Any

import numpy as np
from scipy import sparse

from .const import (
    WRMF_ALPHA,
    WRMF_FACTORS,
    WRMF_INIT_SCALE,
    WRMF_ITERATIONS,
    WRMF_REGULARIZATION,
)
from .domain import ProgramId, UserId
from .exceptions import TrainingError
from .ingestion import DailyViews

_LOGGER = logging.getLogger(__name__)

MODEL_FORMAT = "tvrank-wrmf/1"


@dataclass(frozen=True)
class WrmfParams:
    """WRMF hyperparameters."""

    factors: int = WRMF_FACTORS
    alpha: float = WRMF_ALPHA
    regularization: float = WRMF_REGULARIZATION
    iterations: int = WRMF_ITERATIONS
    seed: int = 0
    binary: bool = False

    def __post_init__(self) -> None:
        """Validate the parameters."""
        if self.factors < 1:
            raise TrainingError(f"Invalid factors: {self.factors} (must be >= 1)")
        if self.alpha <= 0:
            raise TrainingError(f"Invalid alpha: {self.alpha} (must be > 0)")
        if self.regularization <= 0:
            raise TrainingError(f"Invalid regularization: {self.regularization} (must be > 0)")
        if self.iterations < 0:
            raise TrainingError(f"Invalid iterations: {self.iterations} (must be >= 0)")


@dataclass
class MfModel:
    """User and item latent factors."""

    params: WrmfParams
    user_ids: dict[UserId, int]
    item_ids: dict[ProgramId, int]
    user_factors: np.ndarray
    item_factors: np.ndarray
    loss_history: list[float] = field(default_factory=list)

    def __post_init__(self) -> None:
        """Validate factor shapes."""
        if self.user_factors.shape != (len(self.user_ids), self.params.factors):
            raise TrainingError(f"Invalid user factor shape: {self.user_factors.shape}")
        if self.item_factors.shape != (len(self.item_ids), self.params.factors):
            raise TrainingError(f"Invalid item factor shape: {self.item_factors.shape}")

    def predict(self, user: UserId, program: ProgramId) -> float:
        """Return the dot product of the user and program factors, 0 when unknown."""
        row, col = self.user_ids.get(user), self.item_ids.get(program)
        if row is None or col is None:
            return 0.0
        return float(self.user_factors[row] @ self.item_factors[col])

    def score(self, user: UserId, programs: Sequence[ProgramId]) -> np.ndarray:
        """Return the score of every program for a user, 0 when unknown."""
        scores = np.zeros(len(programs))
        if (row := self.user_ids.get(user)) is None:
            return scores
        known = self.known(user, programs)
        cols = np.array([self.item_ids[p] for p, ok in zip(programs, known, strict=True) if ok])
        if len(cols):
            scores[known] = self.item_factors[cols] @ self.user_factors[row]
        return scores

    def known(self, user: UserId, programs: Sequence[ProgramId]) -> np.ndarray:
        """Return whether the user and each program have factors."""
        if user not in self.user_ids:
            return np.zeros(len(programs), bool)
        return np.array([p in self.item_ids for p in programs], bool)

    def save(self, path: Path | str) -> None:
        """Write the model as JSON: header, then row-major factor arrays."""
        data = {
            "format": MODEL_FORMAT,
            "params": asdict(self.params),
            "n_users": len(self.user_ids),
            "n_items": len(self.item_ids),
            "users": list(self.user_ids),
            "items": list(self.item_ids),
            "user_factors": self.user_factors.ravel().tolist(),
            "item_factors": self.item_factors.ravel().tolist(),
            "loss_history": self.loss_history,
        }
        Path(path).write_text(json.dumps(data) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: Path | str) -> MfModel:
        """Read a model written by `save`."""
        data: dict[str, Any] = json.loads(Path(path).read_text(encoding="utf-8"))
        if data.get("format") != MODEL_FORMAT:
            raise TrainingError(f"{path}: not a WRMF model file")
        params = WrmfParams(**data["params"])
        return cls(
            params=params,
            user_ids={int(u): i for i, u in enumerate(data["users"])},
            item_ids={int(p): i for i, p in enumerate(data["items"])},
            user_factors=np.array(data["user_factors"]).reshape(data["n_users"], params.factors),
            item_factors=np.array(data["item_factors"]).reshape(data["n_items"], params.factors),
            loss_history=list(data["loss_history"]),
        )


def preference_matrix(
    users: np.ndarray, items: np.ndarray, values: np.ndarray, binary: bool = False
) -> tuple[sparse.csr_matrix, dict[UserId, int], dict[ProgramId, int]]:
    """Return the r matrix with its user and item index maps."""
    user_ids = {int(u): i for i, u in enumerate(np.unique(users))}
    item_ids = {int(p): i for i, p in enumerate(np.unique(items))}
    rows = np.array([user_ids[int(u)] for u in users], dtype=np.int64)
    cols = np.array([item_ids[int(p)] for p in items], dtype=np.int64)
    matrix = sparse.coo_matrix(
        (np.asarray(values, dtype=np.float64), (rows, cols)),
        shape=(len(user_ids), len(item_ids)),
    ).tocsr()
    matrix.eliminate_zeros()
    if binary:
        matrix.data[:] = 1.0
    return matrix, user_ids, item_ids


def window_counts(daily: DailyViews) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return (user, program, positive view count) triples of a window."""
    positive = daily.preference == 1
    if not positive.any():
        return np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0)
    pairs, counts = np.unique(
        np.stack([daily.user[positive], daily.program[positive]], axis=1),
        axis=0,
        return_counts=True,
    )
    return pairs[:, 0], pairs[:, 1], counts.astype(np.float64)


def _loss(
    ratings: sparse.csr_matrix, x: np.ndarray, y: np.ndarray, params: WrmfParams
) -> float:
    # dense part: every pair with c=1, p=0, then corrected on observed entries
    total = float(np.trace((x.T @ x) @ (y.T @ y)))
    coo = ratings.tocoo()
    predicted = np.einsum("ij,ij->i", x[coo.row], y[coo.col])
    confidence = 1.0 + params.alpha * coo.data
    total += float(np.sum(confidence * (1.0 - predicted) ** 2 - predicted**2))
    total += params.regularization * float(np.sum(x * x) + np.sum(y * y))
    return total


def loss(model: MfModel, ratings: sparse.csr_matrix) -> float:
    """Return the weighted squared loss of a model on its r matrix."""
    return _loss(ratings, model.user_factors, model.item_factors, model.params)


def _solve_rows(
    ratings: sparse.csr_matrix, fixed: np.ndarray, params: WrmfParams
) -> np.ndarray:
    """Solve every row's regularized normal equations exactly."""
    factors = params.factors
    gram = fixed.T @ fixed + params.regularization * np.eye(factors)
    solved = np.zeros((ratings.shape[0], factors))
    for row in range(ratings.shape[0]):
        start, end = ratings.indptr[row], ratings.indptr[row + 1]
        if start == end:
            continue
        cols = ratings.indices[start:end]
        confidence = 1.0 + params.alpha * ratings.data[start:end]
        block = fixed[cols]
        matrix = gram + block.T @ ((confidence - 1.0)[:, None] * block)
        solved[row] = np.linalg.solve(matrix, block.T @ confidence)
    return solved


def fit(
    users: np.ndarray,
    items: np.ndarray,
    values: np.ndarray,
    params: WrmfParams | None = None,
    callback: Callable[[int, float], None] | None = None,
) -> MfModel:
    """Fit WRMF by alternating exact user and item solves.

    ``values`` are the r of every observed (user, item) pair; confidence is
    ``1 + alpha * r`` and the preference is 1 wherever r > 0. ``callback`` gets
    (half-sweep number, loss) after every half-sweep.
    """
    params = params or WrmfParams()
    if len(users) == 0:
        raise TrainingError("Cannot fit WRMF without interactions")
    ratings, user_ids, item_ids = preference_matrix(users, items, values, params.binary)
    if ratings.nnz == 0:
        raise TrainingError("Cannot fit WRMF without interactions")
    rng = np.random.default_rng(params.seed)
    x = rng.uniform(0.0, WRMF_INIT_SCALE, (len(user_ids), params.factors))
    y = rng.uniform(0.0, WRMF_INIT_SCALE, (len(item_ids), params.factors))
    transposed = ratings.T.tocsr()
    history = [_loss(ratings, x, y, params)]
    for iteration in range(params.iterations):
        x = _solve_rows(ratings, y, params)
        history.append(_loss(ratings, x, y, params))
        y = _solve_rows(transposed, x, params)
        history.append(_loss(ratings, x, y, params))
        if not np.isfinite(history[-1]):
            raise TrainingError(f"WRMF loss is not finite at iteration {iteration}")
        if callback is not None:
            callback(2 * iteration + 1, history[-2])
            callback(2 * iteration + 2, history[-1])
        _LOGGER.debug("WRMF iteration %s: loss %.6f", iteration, history[-1])
    _LOGGER.info(
        "Fitted WRMF on %s users x %s items (%s observed), loss %.4f",
        len(user_ids),
        len(item_ids),
        ratings.nnz,
        history[-1],
    )
    return MfModel(params, user_ids, item_ids, x, y, history)


def fit_window(daily: DailyViews, params: WrmfParams | None = None) -> MfModel:
    """Fit WRMF on the positive view counts of a window."""
    return fit(*window_counts(daily), params=params)
