"""Tests for lambda gradients and the boosted tree ranker."""

from __future__ import annotations

from pathlib import Path

from hypothesis import given, settings, strategies as st
import numpy as np
import pytest

from tvrank.exceptions import TrainingError
from tvrank.ltr import (
    GbmModel,
    LambdaMartParams,
    RankingDataset,
    compute_lambdas,
    discounts,
    fit,
    fit_with_holdout,
    predict,
    query_ndcg,
)


def pairwise_cost(scores: np.ndarray, labels: np.ndarray, sigma: float) -> float:
    """Sum of log(1 + exp(-sigma (s_i - s_j))) over pairs with label_i > label_j."""
    total = 0.0
    for i in range(len(scores)):
        for j in range(len(scores)):
            if labels[i] > labels[j]:
                total += np.log1p(np.exp(-sigma * (scores[i] - scores[j])))
    return total


def separable(n_queries: int = 30, size: int = 6, seed: int = 0) -> RankingDataset:
    """Queries whose first feature is the label and second is noise."""
    rng = np.random.default_rng(seed)
    labels = np.zeros((n_queries, size), np.int64)
    for row in labels:
        row[rng.choice(size, 2, replace=False)] = 1
    labels = labels.ravel()
    features = np.column_stack([labels.astype(float), rng.normal(size=len(labels))])
    return RankingDataset.from_arrays(features, labels, np.repeat(np.arange(n_queries), size))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_lambdas_are_the_negative_gradient(seed: int) -> None:
    """Without the metric weight, lambdas match finite differences of the pairwise cost."""
    rng = np.random.default_rng(seed)
    scores = rng.normal(size=5)
    labels = np.array([1, 0, 0, 1, 0])
    rng.shuffle(labels)
    sigma = 1.5
    lambdas, hessians = compute_lambdas(scores, labels, sigma=sigma, use_delta=False)
    step = 1e-6
    for i in range(5):
        up, down = scores.copy(), scores.copy()
        up[i] += step
        down[i] -= step
        slope = (pairwise_cost(up, labels, sigma) - pairwise_cost(down, labels, sigma)) / (2 * step)
        assert lambdas[i] == pytest.approx(-slope, abs=1e-5)
    assert np.all(hessians >= 0)


def test_lambdas_balance_per_query() -> None:
    """Lambdas of each query sum to zero; uniform-label queries get none."""
    rng = np.random.default_rng(3)
    labels = np.array([1, 0, 0, 1, 1, 0, 0, 0, 0, 1, 1, 1])
    ptr = np.array([0, 6, 9, 12])
    lambdas, _ = compute_lambdas(rng.normal(size=12), labels, ptr, k=3)
    assert lambdas[:6].sum() == pytest.approx(0, abs=1e-12)
    assert lambdas[6:9].tolist() == [0, 0, 0]
    assert lambdas[9:].tolist() == [0, 0, 0]
    assert np.all(lambdas[:6][labels[:6] == 1] >= 0)


def test_discounts_truncate() -> None:
    """Ranks at or past k have no discount."""
    assert discounts(np.array([0, 1, 2]), 2).tolist() == pytest.approx([1, 1 / np.log2(3), 0])


def test_query_ndcg() -> None:
    """Perfect orderings score 1; queries without positives are skipped."""
    dataset = RankingDataset.from_arrays(
        np.zeros((5, 1)), np.array([1, 0, 0, 0, 0]), np.array([1, 1, 1, 2, 2])
    )
    assert query_ndcg(dataset, np.array([3.0, 2.0, 1.0, 0.0, 0.0]), 10).tolist() == [1.0]
    worst = query_ndcg(dataset, np.array([1.0, 2.0, 3.0, 0.0, 0.0]), 10)
    assert worst.tolist() == pytest.approx([1 / np.log2(4)])


def test_dataset_validation() -> None:
    """Labels are binary and offsets cover every row."""
    with pytest.raises(ValueError, match="Labels"):
        RankingDataset.from_arrays(np.zeros((2, 1)), np.array([2, 0]), np.array([1, 1]))
    with pytest.raises(ValueError, match="offsets"):
        RankingDataset(
            np.zeros((2, 1)),
            np.array([1, 0]),
            np.array([0, 1]),
            np.array([1]),
            np.array([1]),
            np.array([5, 6]),
        )


def test_trainable_and_split() -> None:
    """Uniform queries are dropped; the hold-out splits by user."""
    dataset = RankingDataset.from_arrays(
        np.zeros((6, 1)), np.array([1, 0, 1, 1, 0, 1]), np.array([1, 1, 2, 2, 3, 3])
    )
    assert dataset.trainable().qids.tolist() == [1, 3]
    train, held = dataset.split_users(1 / 3, seed=4)
    assert train.n_queries == 2
    assert held.n_queries == 1
    assert set(train.users) | set(held.users) == {1, 2, 3}


def test_separable_data_is_ranked_perfectly() -> None:
    """Stumps on the label feature order every query perfectly."""
    dataset = separable()
    params = LambdaMartParams(rounds=5, max_leaves=2, min_samples_leaf=1, truncation=6)
    model = fit(dataset, None, params)
    assert len(model.trees) == 5
    assert all(tree.feature[0] == 0 for tree in model.trees)
    scores = predict(model, dataset.features)
    assert query_ndcg(dataset, scores, 6).tolist() == pytest.approx([1.0] * dataset.n_queries)
    assert model.training_ndcg[-1] == pytest.approx(1.0)
    assert model.training_ndcg[-1] >= model.training_ndcg[0]


def test_holdout_records_validation() -> None:
    """A user hold-out tracks validation nDCG for every round."""
    params = LambdaMartParams(rounds=4, max_leaves=3, min_samples_leaf=2, validation_share=0.2)
    model = fit_with_holdout(separable(), params)
    assert len(model.validation_ndcg) == 5
    assert 0 <= model.best_round <= 4


def test_save_and_load(tmp_path: Path) -> None:
    """A saved model predicts identically after loading."""
    dataset = separable(n_queries=10)
    model = fit(dataset, None, LambdaMartParams(rounds=3, max_leaves=4, min_samples_leaf=2))
    model.save(tmp_path / "ranker.json")
    restored = GbmModel.load(tmp_path / "ranker.json")
    assert np.allclose(restored.predict(dataset.features), model.predict(dataset.features))
    assert restored.params == model.params
    assert isinstance(restored.predict(dataset.features[0]), float)


def test_predict_checks_length() -> None:
    """Feature vectors must match the training width."""
    model = fit(separable(n_queries=4), None, LambdaMartParams(rounds=1, min_samples_leaf=1))
    with pytest.raises(TrainingError, match="length"):
        model.predict(np.zeros(3))


def test_fit_needs_queries() -> None:
    """An empty dataset cannot be fitted."""
    empty = RankingDataset.from_queries([], [], [], [], [], ("a",))
    with pytest.raises(TrainingError):
        fit(empty)


def test_uniform_labels_give_a_constant_model() -> None:
    """Without mixed-label queries no tree is grown."""
    dataset = RankingDataset.from_arrays(np.eye(3), np.array([1, 1, 0]), np.array([1, 1, 2]))
    model = fit(dataset, None, LambdaMartParams(rounds=3))
    assert model.trees == []
    assert model.predict(np.eye(3)).tolist() == [0, 0, 0]


@pytest.mark.parametrize(
    "kwargs",
    [{"rounds": -1}, {"learning_rate": 0}, {"max_leaves": 1}, {"validation_share": 1.0}],
)
def test_invalid_parameters(kwargs: dict[str, float]) -> None:
    """Parameters are validated on construction."""
    with pytest.raises(TrainingError):
        LambdaMartParams(**kwargs)
