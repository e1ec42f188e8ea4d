# distress_transfer/models/forest.py
"""
Random forest of CART trees: Gini splits, bootstrap rows, a random feature
subset per node and majority voting (ties vote Control).
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ..features import FeatureMatrix
from .base import ClassifierKind, RFParams, TrainedClassifier, training_arrays

logger = logging.getLogger(__name__)

LEAF = -1


@dataclass(frozen=True, eq=False)
class DecisionTree:
    """Flat node arrays; node 0 is the root, feature == LEAF marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    vote: np.ndarray  # +1 / -1 at leaves

    def predict(self, values: np.ndarray) -> np.ndarray:
        nodes = np.zeros(values.shape[0], dtype=int)
        active = self.feature[nodes] != LEAF
        while active.any():
            idx = np.flatnonzero(active)
            current = nodes[idx]
            go_left = values[idx, self.feature[current]] <= self.threshold[current]
            nodes[idx] = np.where(go_left, self.left[current], self.right[current])
            active = self.feature[nodes] != LEAF
        return self.vote[nodes]

    @property
    def depth(self) -> int:
        depths = np.zeros(len(self.feature), dtype=int)
        for node in range(len(self.feature)):
            if self.feature[node] != LEAF:
                depths[self.left[node]] = depths[node] + 1
                depths[self.right[node]] = depths[node] + 1
        return int(depths.max(initial=0))

    def to_dict(self) -> Dict[str, List]:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "vote": self.vote.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, List]) -> "DecisionTree":
        return cls(
            feature=np.asarray(data["feature"], dtype=int),
            threshold=np.asarray(data["threshold"], dtype=float),
            left=np.asarray(data["left"], dtype=int),
            right=np.asarray(data["right"], dtype=int),
            vote=np.asarray(data["vote"], dtype=int),
        )


def gini(n_pos, n) -> np.ndarray:
    """Gini impurity of a two-class node from its positive and total counts."""
    p = np.divide(n_pos, n, out=np.zeros_like(n_pos, dtype=float), where=n > 0)
    return 2.0 * p * (1.0 - p)


def majority_vote(y: np.ndarray) -> int:
    """+1 only with a strict Distress majority."""
    return 1 if np.sum(y > 0) > np.sum(y < 0) else -1


def best_split(x: np.ndarray, y: np.ndarray, min_leaf: int) -> Tuple[float, Optional[float]]:
    """
    Lowest weighted child Gini over midpoint thresholds of one feature.

    Returns (impurity, threshold); threshold is None when no split leaves
    min_leaf rows on both sides.
    """
    n = x.shape[0]
    order = np.argsort(x, kind="stable")
    xs = x[order]
    pos = np.cumsum(y[order] > 0)
    n_left = np.arange(1, n)
    valid = (xs[:-1] < xs[1:]) & (n_left >= min_leaf) & (n - n_left >= min_leaf)
    if not valid.any():
        return np.inf, None
    pos_left = pos[:-1]
    pos_right = pos[-1] - pos_left
    n_right = n - n_left
    impurity = (n_left * gini(pos_left, n_left) + n_right * gini(pos_right, n_right)) / n
    impurity = np.where(valid, impurity, np.inf)
    k = int(np.argmin(impurity))
    return float(impurity[k]), float((xs[k] + xs[k + 1]) / 2.0)


class _TreeBuilder:
    def __init__(self, values: np.ndarray, y: np.ndarray, hp: RFParams, n_features: int, rng: np.random.Generator):
        self.values = values
        self.y = y
        self.hp = hp
        self.n_features = n_features
        self.rng = rng
        self.feature: List[int] = []
        self.threshold: List[float] = []
        self.left: List[int] = []
        self.right: List[int] = []
        self.vote: List[int] = []

    def _new_node(self, rows: np.ndarray) -> int:
        self.feature.append(LEAF)
        self.threshold.append(0.0)
        self.left.append(LEAF)
        self.right.append(LEAF)
        self.vote.append(majority_vote(self.y[rows]))
        return len(self.feature) - 1

    def grow(self, rows: np.ndarray, depth: int) -> int:
        node = self._new_node(rows)
        y = self.y[rows]
        if depth >= self.hp.max_depth or rows.size < 2 * self.hp.min_leaf or np.all(y == y[0]):
            return node

        parent = float(gini(np.array([np.sum(y > 0)]), np.array([y.size]))[0])
        candidates = self.rng.choice(self.values.shape[1], size=self.n_features, replace=False)
        best = (parent, None, None)
        for f in candidates:
            impurity, threshold = best_split(self.values[rows, f], y, self.hp.min_leaf)
            if threshold is not None and impurity < best[0]:
                best = (impurity, int(f), threshold)
        _, f, threshold = best
        if f is None:
            return node

        goes_left = self.values[rows, f] <= threshold
        self.feature[node] = f
        self.threshold[node] = threshold
        self.left[node] = self.grow(rows[goes_left], depth + 1)
        self.right[node] = self.grow(rows[~goes_left], depth + 1)
        return node

    def build(self, rows: np.ndarray) -> DecisionTree:
        self.grow(rows, 0)
        return DecisionTree(
            feature=np.asarray(self.feature, dtype=int),
            threshold=np.asarray(self.threshold, dtype=float),
            left=np.asarray(self.left, dtype=int),
            right=np.asarray(self.right, dtype=int),
            vote=np.asarray(self.vote, dtype=int),
        )


@dataclass(frozen=True, eq=False)
class ForestModel(TrainedClassifier):
    trees: Tuple[DecisionTree, ...] = field(default=())

    kind = ClassifierKind.RF

    def votes(self, values: np.ndarray) -> np.ndarray:
        """Per-row sum of tree votes (+1 Distress / -1 Control)."""
        total = np.zeros(values.shape[0], dtype=int)
        for tree in self.trees:
            total += tree.predict(values)
        return total

    def decision_values(self, values: np.ndarray) -> np.ndarray:
        return self.votes(values) / max(1, len(self.trees))

    def parameters(self) -> Dict[str, Any]:
        return {"trees": [tree.to_dict() for tree in self.trees]}

    @classmethod
    def from_parameters(cls, fingerprint, feature_names, hp, parameters):
        return cls(
            fingerprint=fingerprint,
            feature_names=tuple(feature_names),
            hp=hp,
            trees=tuple(DecisionTree.from_dict(tree) for tree in parameters["trees"]),
        )


def canonical_row_order(values: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Row order by content (label, then feature values) so bootstraps ignore ingest order."""
    keys = [values[:, j] for j in range(values.shape[1] - 1, -1, -1)] + [y]
    return np.lexsort(keys)


def train_rf(X: FeatureMatrix, y, hp: RFParams = RFParams()) -> ForestModel:
    """
    Grow hp.n_trees trees on bootstrap samples.

    Tree t draws its bootstrap and feature subsets from a generator seeded
    with (hp.seed, t), after rows are put in canonical content order.
    """
    values, labels = training_arrays(X, y)
    order = canonical_row_order(values, labels)
    values, labels = values[order], labels[order]
    n_rows, n_cols = values.shape
    n_features = hp.features_per_split or max(1, int(math.sqrt(n_cols)))
    n_features = min(n_features, n_cols)

    trees = []
    for t in range(hp.n_trees):
        rng = np.random.default_rng([hp.seed, t])
        rows = np.sort(rng.integers(0, n_rows, size=n_rows))
        trees.append(_TreeBuilder(values, labels, hp, n_features, rng).build(rows))

    logger.debug(
        f"RF trained: {{'n_trees': {hp.n_trees}, 'max_depth': {hp.max_depth}, 'features_per_split': {n_features}, "
        f"'nodes': {sum(len(tree.feature) for tree in trees)}}}"
    )
    return ForestModel(
        fingerprint=X.spec.fingerprint(),
        feature_names=tuple(X.spec.names),
        hp=hp,
        trees=tuple(trees),
    )
