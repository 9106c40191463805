"""tvrank LambdaMART: boosted regression trees trained on lambda gradients."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import asdict, dataclass, field
import json
import logging
from pathlib import Path
from typing import Any

import numpy as np
from scipy.special import expit

from .const import (
    LTR_HESSIAN_EPSILON,
    LTR_LEARNING_RATE,
    LTR_MAX_LEAVES,
    LTR_MIN_SAMPLES_LEAF,
    LTR_ROUNDS,
    LTR_SIGMA,
    LTR_TRUNCATION,
    LTR_VALIDATION_SHARE,
)
from .exceptions import TrainingError

_LOGGER = logging.getLogger(__name__)

MODEL_FORMAT = "tvrank-lambdamart/1"

# padded pair tensors are processed in buckets of at most this many cells
_BUCKET_CELLS = 1 << 22


@dataclass(frozen=True)
class RankingDataset:
    """Feature rows grouped into ranking queries by ``ptr`` offsets."""

    features: np.ndarray
    labels: np.ndarray
    ptr: np.ndarray
    qids: np.ndarray
    users: np.ndarray
    programs: np.ndarray
    names: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        """Validate shapes and labels."""
        if self.features.ndim != 2 or len(self.features) != len(self.labels):
            raise ValueError(f"Invalid feature matrix shape: {self.features.shape}")
        if self.ptr[0] != 0 or self.ptr[-1] != len(self.labels) or np.any(np.diff(self.ptr) < 0):
            raise ValueError("Invalid query offsets")
        if len(self.labels) and not np.isin(self.labels, (0, 1)).all():
            raise ValueError("Labels must be 0 or 1")

    @classmethod
    def from_queries(
        cls,
        qids: Sequence[int],
        users: Sequence[int],
        programs: Sequence[np.ndarray],
        blocks: Sequence[np.ndarray],
        labels: Sequence[np.ndarray],
        names: Sequence[str] = (),
    ) -> RankingDataset:
        """Stack per-query blocks into one dataset."""
        sizes = [len(block) for block in blocks]
        width = len(names) if names else (blocks[0].shape[1] if blocks else 0)
        return cls(
            features=np.vstack(blocks) if blocks else np.zeros((0, width)),
            labels=np.concatenate(labels).astype(np.int64) if labels else np.zeros(0, np.int64),
            ptr=np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64),
            qids=np.asarray(qids, dtype=np.int64),
            users=np.asarray(users, dtype=np.int64),
            programs=(
                np.concatenate(programs).astype(np.int64) if programs else np.zeros(0, np.int64)
            ),
            names=tuple(names),
        )

    @classmethod
    def from_arrays(
        cls, features: np.ndarray, labels: np.ndarray, query_ids: np.ndarray
    ) -> RankingDataset:
        """Group consecutive rows sharing a query id."""
        query_ids = np.asarray(query_ids)
        starts = np.flatnonzero(np.r_[True, query_ids[1:] != query_ids[:-1]])
        return cls(
            features=np.asarray(features, dtype=np.float64),
            labels=np.asarray(labels, dtype=np.int64),
            ptr=np.r_[starts, len(query_ids)].astype(np.int64),
            qids=query_ids[starts].astype(np.int64),
            users=query_ids[starts].astype(np.int64),
            programs=np.arange(len(query_ids), dtype=np.int64),
        )

    def __len__(self) -> int:
        """Return the number of rows."""
        return len(self.labels)

    @property
    def n_queries(self) -> int:
        """Return the number of queries."""
        return len(self.ptr) - 1

    @property
    def sizes(self) -> np.ndarray:
        """Return the number of documents per query."""
        return np.diff(self.ptr)

    @property
    def row_qids(self) -> np.ndarray:
        """Return the query id of every row."""
        return np.repeat(self.qids, self.sizes)

    @property
    def row_users(self) -> np.ndarray:
        """Return the user of every row."""
        return np.repeat(self.users, self.sizes)

    def query(self, index: int) -> slice:
        """Return the row slice of a query."""
        return slice(int(self.ptr[index]), int(self.ptr[index + 1]))

    def subset(self, queries: Sequence[int] | np.ndarray) -> RankingDataset:
        """Return the dataset restricted to the given query indices."""
        queries = np.asarray(queries, dtype=np.int64)
        rows = (
            np.concatenate([np.arange(self.ptr[q], self.ptr[q + 1]) for q in queries])
            if len(queries)
            else np.zeros(0, np.int64)
        )
        sizes = self.sizes[queries]
        return RankingDataset(
            features=self.features[rows],
            labels=self.labels[rows],
            ptr=np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64),
            qids=self.qids[queries],
            users=self.users[queries],
            programs=self.programs[rows],
            names=self.names,
        )

    def trainable(self) -> RankingDataset:
        """Return the queries with at least 2 documents and mixed labels."""
        keep = [
            q
            for q in range(self.n_queries)
            if self.sizes[q] >= 2 and 0 < self.labels[self.query(q)].sum() < self.sizes[q]
        ]
        return self.subset(keep)

    def split_users(self, share: float, seed: int) -> tuple[RankingDataset, RankingDataset]:
        """Hold out the queries of a seeded share of users."""
        users = np.unique(self.users)
        rng = np.random.default_rng(seed)
        held = set(rng.choice(users, size=int(round(share * len(users))), replace=False).tolist())
        mask = np.array([user in held for user in self.users.tolist()], bool)
        return self.subset(np.flatnonzero(~mask)), self.subset(np.flatnonzero(mask))


def discounts(ranks: np.ndarray, k: int) -> np.ndarray:
    """Return the DCG discount of 0-based ranks, 0 at and beyond ``k``."""
    return np.where(ranks < k, 1.0 / np.log2(ranks + 2.0), 0.0)


@dataclass(frozen=True)
class _Bucket:
    """Queries padded to a common size."""

    rows: np.ndarray
    mask: np.ndarray
    gains: np.ndarray
    ideal: np.ndarray
    pairs: np.ndarray
    queries: np.ndarray


def _plan(dataset: RankingDataset, k: int) -> list[_Bucket]:
    """Pad queries with a positive ideal DCG into size-sorted buckets."""
    sizes = dataset.sizes
    ideal = np.zeros(dataset.n_queries)
    for q in range(dataset.n_queries):
        gains = np.sort(dataset.labels[dataset.query(q)].astype(np.float64))[::-1]
        ideal[q] = float(gains @ discounts(np.arange(len(gains)), k))
    order = [int(q) for q in np.argsort(sizes, kind="stable") if ideal[q] > 0]
    groups: list[list[int]] = []
    for q in order:
        # sizes ascend, so the newest query sets the padded width
        if groups and (len(groups[-1]) + 1) * int(sizes[q]) ** 2 <= _BUCKET_CELLS:
            groups[-1].append(q)
        else:
            groups.append([q])
    buckets: list[_Bucket] = []
    for group in groups:
        chosen = np.array(group, dtype=np.int64)
        width = int(sizes[chosen].max())
        offsets = np.arange(width)
        mask = offsets[None, :] < sizes[chosen][:, None]
        rows = np.where(mask, dataset.ptr[chosen][:, None] + offsets[None, :], 0)
        gains = np.where(mask, dataset.labels[rows], 0).astype(np.float64)
        labels = np.where(mask, gains, -1.0)
        pairs = mask[:, :, None] & mask[:, None, :] & (labels[:, :, None] > labels[:, None, :])
        buckets.append(_Bucket(rows, mask, gains, ideal[chosen], pairs, chosen))
    return buckets


def _ranks(scores: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Return 0-based positions by descending score, ties by document order."""
    order = np.argsort(np.where(mask, -scores, np.inf), axis=1, kind="stable")
    ranks = np.empty_like(order)
    np.put_along_axis(ranks, order, np.broadcast_to(np.arange(order.shape[1]), order.shape), axis=1)
    return ranks


def _bucket_lambdas(
    bucket: _Bucket, scores: np.ndarray, k: int, sigma: float, use_delta: bool
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    padded = np.where(bucket.mask, scores[bucket.rows], 0.0)
    discount = discounts(_ranks(padded, bucket.mask), k) * bucket.mask
    ndcg = (bucket.gains * discount).sum(axis=1) / bucket.ideal
    rho = expit(-sigma * (padded[:, :, None] - padded[:, None, :]))
    if use_delta:
        delta = (
            np.abs(bucket.gains[:, :, None] - bucket.gains[:, None, :])
            * np.abs(discount[:, :, None] - discount[:, None, :])
            / bucket.ideal[:, None, None]
        )
        weight = np.where(bucket.pairs, delta, 0.0)
    else:
        weight = bucket.pairs.astype(np.float64)
    pushed = weight * rho
    curved = weight * rho * (1.0 - rho)
    lambdas = sigma * (pushed.sum(axis=2) - pushed.sum(axis=1))
    hessians = sigma * sigma * (curved.sum(axis=2) + curved.sum(axis=1))
    return lambdas, hessians, ndcg


def _lambdas(
    buckets: Sequence[_Bucket],
    scores: np.ndarray,
    k: int,
    sigma: float,
    use_delta: bool = True,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    lambdas = np.zeros(len(scores))
    hessians = np.zeros(len(scores))
    ndcg: list[np.ndarray] = []
    for bucket in buckets:
        bucket_lambdas, bucket_hessians, bucket_ndcg = _bucket_lambdas(
            bucket, scores, k, sigma, use_delta
        )
        lambdas[bucket.rows[bucket.mask]] = bucket_lambdas[bucket.mask]
        hessians[bucket.rows[bucket.mask]] = bucket_hessians[bucket.mask]
        ndcg.append(bucket_ndcg)
    return lambdas, hessians, np.concatenate(ndcg) if ndcg else np.zeros(0)


def compute_lambdas(
    scores: np.ndarray,
    labels: np.ndarray,
    ptr: np.ndarray | None = None,
    k: int = LTR_TRUNCATION,
    sigma: float = LTR_SIGMA,
    use_delta: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """Return LambdaRank gradients and second derivatives.

    Lambdas are the negative gradient of the pairwise logistic cost weighted by
    |delta nDCG@k| of swapping each (positive, negative) pair in the current
    ranking; with ``use_delta=False`` every pair weighs 1. ``ptr`` holds the
    query offsets (one query when omitted); uniform-label queries get zeros.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if len(scores) != len(labels):
        raise ValueError(f"Invalid scores: {len(scores)} scores for {len(labels)} labels")
    if ptr is None:
        ptr = np.array([0, len(labels)])
    dataset = RankingDataset(
        features=np.zeros((len(labels), 0)),
        labels=labels,
        ptr=np.asarray(ptr, dtype=np.int64),
        qids=np.arange(len(ptr) - 1),
        users=np.arange(len(ptr) - 1),
        programs=np.arange(len(labels)),
    )
    lambdas, hessians, _ = _lambdas(_plan(dataset, k), scores, k, sigma, use_delta)
    return lambdas, hessians


def query_ndcg(dataset: RankingDataset, scores: np.ndarray, k: int) -> np.ndarray:
    """Return nDCG@k of every query with at least one positive."""
    return _lambdas(_plan(dataset, k), scores, k, LTR_SIGMA)[2]


@dataclass(frozen=True)
class RegressionTree:
    """Axis-aligned regression tree stored as node arrays; leaves have feature -1."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_leaves(self) -> int:
        """Return the number of leaves."""
        return int(np.sum(self.feature < 0))

    def apply(self, features: np.ndarray) -> np.ndarray:
        """Return the leaf reached by every row."""
        node = np.zeros(len(features), dtype=np.int64)
        rows = np.arange(len(features))
        while (internal := self.feature[node] >= 0).any():
            active = rows[internal]
            current = node[active]
            goes_left = features[active, self.feature[current]] <= self.threshold[current]
            node[active] = np.where(goes_left, self.left[current], self.right[current])
        return node

    def predict(self, features: np.ndarray) -> np.ndarray:
        """Return the leaf value of every row."""
        return self.value[self.apply(features)]

    def as_dict(self) -> dict[str, list[Any]]:
        """Return the node arrays as lists."""
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict[str, list[Any]]) -> RegressionTree:
        """Rebuild a tree from `as_dict` output."""
        return cls(
            feature=np.array(data["feature"], dtype=np.int64),
            threshold=np.array(data["threshold"], dtype=np.float64),
            left=np.array(data["left"], dtype=np.int64),
            right=np.array(data["right"], dtype=np.int64),
            value=np.array(data["value"], dtype=np.float64),
        )


@dataclass(frozen=True)
class _Split:
    gain: float
    feature: int
    threshold: float


def _best_split(
    sel: np.ndarray, columns: np.ndarray, targets: np.ndarray, min_leaf: int
) -> _Split | None:
    """Return the best variance-reduction split of a node, lowest feature/threshold on ties."""
    n_features, size = sel.shape
    if size < 2 * min_leaf or size < 2:
        return None
    values = np.take_along_axis(columns, sel, axis=1)
    sums = np.cumsum(targets[sel], axis=1)
    total = sums[:, -1:]
    left_n = np.arange(1, size, dtype=np.float64)
    right_n = size - left_n
    left_sum = sums[:, :-1]
    gain = left_sum**2 / left_n + (total - left_sum) ** 2 / right_n - total**2 / size
    valid = (values[:, :-1] < values[:, 1:]) & (left_n >= min_leaf) & (right_n >= min_leaf)
    gain = np.where(valid, gain, -np.inf)
    best = int(np.argmax(gain))
    feature, position = divmod(best, size - 1)
    if not gain[feature, position] > 1e-12:
        return None
    threshold = (values[feature, position] + values[feature, position + 1]) / 2.0
    return _Split(float(gain[feature, position]), int(feature), float(threshold))


def grow_tree(
    columns: np.ndarray,
    presorted: np.ndarray,
    lambdas: np.ndarray,
    hessians: np.ndarray,
    max_leaves: int,
    min_samples_leaf: int,
) -> RegressionTree:
    """Grow a best-first regression tree on lambdas with Newton leaf values.

    ``columns`` is the transposed feature matrix and ``presorted`` the per-feature
    row order of it; each node keeps its rows in that order so children are a
    stable partition of their parent.
    """
    feature: list[int] = [-1]
    threshold: list[float] = [0.0]
    left: list[int] = [-1]
    right: list[int] = [-1]
    members = {0: presorted}
    splits = {0: _best_split(presorted, columns, lambdas, min_samples_leaf)}
    while len(members) < max_leaves:
        candidates = [(-split.gain, node) for node, split in splits.items() if split is not None]
        if not candidates:
            break
        _, node = min(candidates)
        split = splits.pop(node)
        sel = members.pop(node)
        goes_left = columns[split.feature] <= split.threshold
        keep = goes_left[sel]
        children = (
            sel[keep].reshape(sel.shape[0], -1),
            sel[~keep].reshape(sel.shape[0], -1),
        )
        feature[node], threshold[node] = split.feature, split.threshold
        for child_rows in children:
            child = len(feature)
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            members[child] = child_rows
            splits[child] = _best_split(child_rows, columns, lambdas, min_samples_leaf)
        left[node], right[node] = len(feature) - 2, len(feature) - 1
    value = np.zeros(len(feature))
    for node, sel in members.items():
        rows = sel[0]
        value[node] = lambdas[rows].sum() / (hessians[rows].sum() + LTR_HESSIAN_EPSILON)
    return RegressionTree(
        feature=np.array(feature, dtype=np.int64),
        threshold=np.array(threshold),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        value=value,
    )


@dataclass(frozen=True)
class LambdaMartParams:
    """LambdaMART hyperparameters."""

    rounds: int = LTR_ROUNDS
    learning_rate: float = LTR_LEARNING_RATE
    max_leaves: int = LTR_MAX_LEAVES
    min_samples_leaf: int = LTR_MIN_SAMPLES_LEAF
    truncation: int = LTR_TRUNCATION
    sigma: float = LTR_SIGMA
    validation_share: float = LTR_VALIDATION_SHARE
    seed: int = 0

    def __post_init__(self) -> None:
        """Validate the parameters."""
        if self.rounds < 0:
            raise TrainingError(f"Invalid rounds: {self.rounds} (must be >= 0)")
        if self.learning_rate <= 0:
            raise TrainingError(f"Invalid learning rate: {self.learning_rate} (must be > 0)")
        if self.max_leaves < 2:
            raise TrainingError(f"Invalid max leaves: {self.max_leaves} (must be >= 2)")
        if self.min_samples_leaf < 1:
            raise TrainingError(f"Invalid min samples leaf: {self.min_samples_leaf} (must be >= 1)")
        if self.truncation < 1:
            raise TrainingError(f"Invalid truncation: {self.truncation} (must be >= 1)")
        if not 0 <= self.validation_share < 1:
            raise TrainingError(
                f"Invalid validation share: {self.validation_share} (range is [0, 1))"
            )


@dataclass
class GbmModel:
    """Boosted regression trees scoring feature vectors."""

    n_features: int
    params: LambdaMartParams = field(default_factory=LambdaMartParams)
    base_score: float = 0.0
    trees: list[RegressionTree] = field(default_factory=list)
    names: tuple[str, ...] = ()
    training_ndcg: list[float] = field(default_factory=list)
    validation_ndcg: list[float] = field(default_factory=list)

    @property
    def learning_rate(self) -> float:
        """Return the shrinkage applied to every tree."""
        return self.params.learning_rate

    @property
    def best_round(self) -> int:
        """Return the round with the highest validation nDCG (0 = no trees)."""
        if not self.validation_ndcg:
            return len(self.trees)
        return int(np.argmax(self.validation_ndcg))

    def predict(self, features: np.ndarray) -> np.ndarray | float:
        """Return base_score plus the shrunk sum of tree outputs."""
        matrix = np.asarray(features, dtype=np.float64)
        single = matrix.ndim == 1
        matrix = np.atleast_2d(matrix)
        if matrix.shape[1] != self.n_features:
            raise TrainingError(
                f"Invalid feature vector length: {matrix.shape[1]} "
                f"(model expects {self.n_features})"
            )
        scores = np.full(len(matrix), self.base_score)
        for tree in self.trees:
            scores += self.learning_rate * tree.predict(matrix)
        return float(scores[0]) if single else scores

    def save(self, path: Path | str) -> None:
        """Write the model as JSON."""
        data = {
            "format": MODEL_FORMAT,
            "params": asdict(self.params),
            "n_features": self.n_features,
            "names": list(self.names),
            "base_score": self.base_score,
            "trees": [tree.as_dict() for tree in self.trees],
            "training_ndcg": self.training_ndcg,
            "validation_ndcg": self.validation_ndcg,
            "best_round": self.best_round,
        }
        Path(path).write_text(json.dumps(data) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: Path | str) -> GbmModel:
        """Read a model written by `save`."""
        data: dict[str, Any] = json.loads(Path(path).read_text(encoding="utf-8"))
        if data.get("format") != MODEL_FORMAT:
            raise TrainingError(f"{path}: not a LambdaMART model file")
        return cls(
            n_features=data["n_features"],
            params=LambdaMartParams(**data["params"]),
            base_score=data["base_score"],
            trees=[RegressionTree.from_dict(tree) for tree in data["trees"]],
            names=tuple(data["names"]),
            training_ndcg=list(data["training_ndcg"]),
            validation_ndcg=list(data["validation_ndcg"]),
        )


def fit(
    train: RankingDataset,
    validation: RankingDataset | None = None,
    params: LambdaMartParams | None = None,
) -> GbmModel:
    """Fit LambdaMART, recording training and validation nDCG@k per round."""
    params = params or LambdaMartParams()
    if not train.n_queries:
        raise TrainingError("Cannot fit LambdaMART on an empty dataset")
    n_features = train.features.shape[1]
    model = GbmModel(n_features=n_features, params=params, names=train.names)
    train = train.trainable()
    buckets = _plan(train, params.truncation)
    if not buckets:
        _LOGGER.warning("No query has mixed labels; model is the constant base score")
        return model

    columns = np.ascontiguousarray(train.features.T)
    presorted = np.argsort(columns, axis=1, kind="stable")
    scores = np.full(len(train), model.base_score)
    validation_buckets = _plan(validation, params.truncation) if validation is not None else []
    validation_scores = (
        np.full(len(validation), model.base_score) if validation_buckets else np.zeros(0)
    )

    def validation_ndcg() -> None:
        if validation_buckets:
            _, _, ndcg = _lambdas(
                validation_buckets, validation_scores, params.truncation, params.sigma
            )
            model.validation_ndcg.append(float(ndcg.mean()))

    validation_ndcg()
    for round_no in range(params.rounds):
        lambdas, hessians, ndcg = _lambdas(buckets, scores, params.truncation, params.sigma)
        model.training_ndcg.append(float(ndcg.mean()))
        tree = grow_tree(
            columns, presorted, lambdas, hessians, params.max_leaves, params.min_samples_leaf
        )
        if not np.isfinite(tree.value).all():
            raise TrainingError(f"Non-finite leaf value at round {round_no}")
        model.trees.append(tree)
        scores += params.learning_rate * tree.predict(train.features)
        if validation_buckets:
            validation_scores += params.learning_rate * tree.predict(validation.features)
        validation_ndcg()
        _LOGGER.debug(
            "round %s: %s leaves, train nDCG@%s %.4f",
            round_no,
            tree.n_leaves,
            params.truncation,
            model.training_ndcg[-1],
        )
    model.training_ndcg.append(float(query_ndcg(train, scores, params.truncation).mean()))
    _LOGGER.info(
        "Fitted LambdaMART: %s trees on %s queries, train nDCG@%s %.4f",
        len(model.trees),
        train.n_queries,
        params.truncation,
        model.training_ndcg[-1],
    )
    return model


def fit_with_holdout(dataset: RankingDataset, params: LambdaMartParams | None = None) -> GbmModel:
    """Fit on all but a seeded user hold-out, which is used for validation."""
    params = params or LambdaMartParams()
    if params.validation_share > 0 and len(np.unique(dataset.users)) > 1:
        train, validation = dataset.split_users(params.validation_share, params.seed)
        if train.n_queries:
            return fit(train, validation, params)
    return fit(dataset, None, params)


def predict(model: GbmModel, features: np.ndarray) -> np.ndarray | float:
    """Return model scores for one vector or a matrix of vectors."""
    return model.predict(features)
