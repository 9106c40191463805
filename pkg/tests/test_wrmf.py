"""Tests for the WRMF model."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest
from sklearn.metrics import roc_auc_score

from tvrank.const import FeedbackSource
from tvrank.domain import FractionAtLeast
from tvrank.exceptions import TrainingError
from tvrank.ingestion import Dataset
from tvrank.wrmf import (
    MfModel,
    WrmfParams,
    fit,
    fit_window,
    loss,
    preference_matrix,
    window_counts,
)

from .common import ALICE, BOB, DRAMA, NATURE, NEWS


def two_blocks(seed: int = 0) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Users 0-19 like items 0-9, users 20-39 like items 10-19; 70% observed."""
    rng = np.random.default_rng(seed)
    truth = np.zeros((40, 20), bool)
    truth[:20, :10] = True
    truth[20:, 10:] = True
    observed = truth & (rng.random(truth.shape) < 0.7)
    users, items = np.nonzero(observed)
    return users, items, np.ones(len(users)), truth


def test_loss_never_increases() -> None:
    """Every half-sweep solves its side exactly."""
    users, items, values, _ = two_blocks()
    seen: list[tuple[int, float]] = []
    model = fit(
        users,
        items,
        values,
        WrmfParams(factors=4, iterations=6, seed=2),
        callback=lambda step, value: seen.append((step, value)),
    )
    assert [step for step, _ in seen] == list(range(1, 13))
    assert len(model.loss_history) == 13
    history = model.loss_history
    for before, after in zip(history, history[1:], strict=False):
        assert after <= before * (1 + 1e-9)
    ratings, _, _ = preference_matrix(users, items, values)
    assert loss(model, ratings) == pytest.approx(history[-1])


def test_recovers_block_structure() -> None:
    """Held-out in-block pairs outrank out-of-block pairs."""
    users, items, values, truth = two_blocks(seed=1)
    model = fit(users, items, values, WrmfParams(factors=4, iterations=10, seed=0))
    observed = set(zip(users.tolist(), items.tolist(), strict=True))
    labels, scores = [], []
    for user in range(40):
        for item in range(20):
            if (user, item) not in observed:
                labels.append(truth[user, item])
                scores.append(model.predict(user, item))
    assert roc_auc_score(labels, scores) > 0.95


def test_binary_values() -> None:
    """Binary mode flattens counts to ones."""
    matrix, user_ids, item_ids = preference_matrix(
        np.array([5, 5, 9]), np.array([1, 2, 1]), np.array([3.0, 1.0, 0.0]), binary=True
    )
    assert user_ids == {5: 0, 9: 1}
    assert item_ids == {1: 0, 2: 1}
    assert matrix.toarray().tolist() == [[1, 1], [0, 0]]


def test_unknown_ids_score_zero() -> None:
    """Users or programs without factors score 0."""
    users, items, values, _ = two_blocks()
    model = fit(users, items, values, WrmfParams(factors=2, iterations=1))
    assert model.predict(99, 0) == 0
    assert model.predict(0, 99) == 0
    assert model.score(99, [0, 1]).tolist() == [0, 0]
    assert model.known(0, [0, 99]).tolist() == [True, False]


def test_save_and_load(tmp_path: Path) -> None:
    """A saved model scores identically after loading."""
    users, items, values, _ = two_blocks()
    model = fit(users, items, values, WrmfParams(factors=3, iterations=2))
    model.save(tmp_path / "wrmf.json")
    restored = MfModel.load(tmp_path / "wrmf.json")
    assert restored.params == model.params
    assert restored.loss_history == model.loss_history
    assert np.allclose(restored.score(3, list(range(20))), model.score(3, list(range(20))))


def test_load_rejects_other_files(tmp_path: Path) -> None:
    """Only WRMF model files load."""
    (tmp_path / "other.json").write_text('{"format": "something-else"}', encoding="utf-8")
    with pytest.raises(TrainingError):
        MfModel.load(tmp_path / "other.json")


def test_fit_needs_interactions() -> None:
    """An empty window cannot be factorized."""
    empty = np.zeros(0, np.int64)
    with pytest.raises(TrainingError):
        fit(empty, empty, np.zeros(0))


@pytest.mark.parametrize(
    "kwargs",
    [{"factors": 0}, {"alpha": 0}, {"regularization": 0}, {"iterations": -1}],
)
def test_invalid_parameters(kwargs: dict[str, float]) -> None:
    """Parameters are validated on construction."""
    with pytest.raises(TrainingError):
        WrmfParams(**kwargs)


def test_window_counts(dataset: Dataset) -> None:
    """Only positive days count towards r."""
    daily = dataset.daily(FractionAtLeast(), FeedbackSource.LIVE_AND_CATCHUP)
    users, programs, counts = window_counts(daily.in_weeks(0, 0))
    assert list(zip(users.tolist(), programs.tolist(), counts.tolist(), strict=True)) == [
        (ALICE, NEWS, 7.0),
        (ALICE, DRAMA, 1.0),
    ]
    model = fit_window(daily, WrmfParams(factors=2, iterations=2))
    assert set(model.user_ids) == {ALICE, BOB}
    assert set(model.item_ids) == {NEWS, DRAMA, NATURE}
