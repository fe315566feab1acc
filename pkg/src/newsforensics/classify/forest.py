"""Random forest of gini-split decision trees, built from scratch.

Trees grow without a depth cap on bootstrap resamples, examining a
random ceil(sqrt(d)) feature subset at every split.  All randomness
derives from per-tree generators spawned off one master seed, and the
fitted forest serializes to plain JSON-compatible dicts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass
class _Node:
    feature: int = -1  # -1 marks a leaf
    threshold: float = 0.0
    left: int = -1
    right: int = -1
    prob: float = 0.0  # P(positive) at the node


def _best_split(x: np.ndarray, y: np.ndarray, min_leaf: int):
    """Best threshold of one feature by weighted gini; None when unsplittable."""
    order = np.argsort(x, kind="mergesort")
    xs, ys = x[order], y[order]
    boundaries = np.nonzero(xs[1:] != xs[:-1])[0] + 1  # candidate left sizes
    if min_leaf > 1:
        n = len(xs)
        boundaries = boundaries[
            (boundaries >= min_leaf) & (n - boundaries >= min_leaf)
        ]
    if boundaries.size == 0:
        return None
    n = len(xs)
    cum_pos = np.cumsum(ys)
    n_left = boundaries
    n_right = n - n_left
    pos_left = cum_pos[boundaries - 1]
    pos_right = cum_pos[-1] - pos_left
    p_left = pos_left / n_left
    p_right = pos_right / n_right
    gini_left = 1.0 - p_left**2 - (1.0 - p_left) ** 2
    gini_right = 1.0 - p_right**2 - (1.0 - p_right) ** 2
    weighted = (n_left * gini_left + n_right * gini_right) / n
    k = int(np.argmin(weighted))  # first minimum: deterministic
    split_at = int(boundaries[k])
    threshold = (xs[split_at - 1] + xs[split_at]) / 2.0
    return float(weighted[k]), threshold


class DecisionTree:
    """Binary CART classifier scoring P(positive) from leaf class fractions."""

    def __init__(self, max_features: int | None = None, min_samples_leaf: int = 1,
                 max_depth: int | None = None):
        self.max_features = max_features
        self.min_samples_leaf = min_samples_leaf
        self.max_depth = max_depth
        self.nodes: list[_Node] = []

    def fit(self, X: np.ndarray, y: np.ndarray, rng: np.random.Generator) -> "DecisionTree":
        n, d = X.shape
        m = min(self.max_features or d, d)
        self.nodes = []
        # (sample indices, depth, parent node id, is-left) processed LIFO so
        # rng consumption follows a fixed traversal order
        stack = [(np.arange(n), 0, -1, False)]
        while stack:
            idx, depth, parent, is_left = stack.pop()
            node_id = len(self.nodes)
            node = _Node(prob=float(y[idx].mean()))
            self.nodes.append(node)
            if parent >= 0:
                if is_left:
                    self.nodes[parent].left = node_id
                else:
                    self.nodes[parent].right = node_id

            pure = node.prob == 0.0 or node.prob == 1.0
            too_small = len(idx) < 2 * self.min_samples_leaf
            too_deep = self.max_depth is not None and depth >= self.max_depth
            if pure or too_small or too_deep:
                continue

            features = rng.choice(d, size=m, replace=False) if m < d else np.arange(d)
            best = None
            for f in sorted(features):
                split = _best_split(X[idx, f], y[idx], self.min_samples_leaf)
                if split and (best is None or split[0] < best[0]):
                    best = (split[0], f, split[1])
            if best is None:
                continue  # sampled features are constant here: leaf
            node.feature, node.threshold = int(best[1]), float(best[2])
            mask = X[idx, node.feature] <= node.threshold
            stack.append((idx[~mask], depth + 1, node_id, False))
            stack.append((idx[mask], depth + 1, node_id, True))
        return self

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        out = np.empty(len(X))
        for i, row in enumerate(X):
            node = self.nodes[0]
            while node.feature >= 0:
                node = self.nodes[
                    node.left if row[node.feature] <= node.threshold else node.right
                ]
            out[i] = node.prob
        return out

    def to_dict(self) -> dict:
        return {
            "nodes": [
                [n.feature, n.threshold, n.left, n.right, n.prob] for n in self.nodes
            ]
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DecisionTree":
        tree = cls()
        tree.nodes = [
            _Node(int(f), float(t), int(l), int(r), float(p))
            for f, t, l, r, p in data["nodes"]
        ]
        return tree


class RandomForestModel:
    """Bootstrap ensemble of probability trees; score is the tree average."""

    kind = "random_forest"

    def __init__(self, n_trees: int = 100, max_features: str | int = "sqrt",
                 min_samples_leaf: int = 1, max_depth: int | None = None):
        self.n_trees = n_trees
        self.max_features = max_features
        self.min_samples_leaf = min_samples_leaf
        self.max_depth = max_depth
        self.trees: list[DecisionTree] = []

    def _resolve_features(self, d: int) -> int:
        if self.max_features == "sqrt":
            return max(1, math.ceil(math.sqrt(d)))
        return int(self.max_features)

    def fit(self, X: np.ndarray, y: np.ndarray, seed: int) -> "RandomForestModel":
        n, d = X.shape
        m = self._resolve_features(d)
        self.trees = []
        for seq in np.random.SeedSequence(seed).spawn(self.n_trees):
            rng = np.random.default_rng(seq)
            sample = rng.integers(0, n, size=n)
            tree = DecisionTree(m, self.min_samples_leaf, self.max_depth)
            tree.fit(X[sample], y[sample], rng)
            self.trees.append(tree)
        return self

    def score(self, X: np.ndarray) -> np.ndarray:
        if not self.trees:
            raise ValueError("model is not fitted")
        return np.mean([tree.predict_proba(X) for tree in self.trees], axis=0)

    def to_dict(self) -> dict:
        return {
            "n_trees": self.n_trees,
            "max_features": self.max_features,
            "min_samples_leaf": self.min_samples_leaf,
            "max_depth": self.max_depth,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RandomForestModel":
        model = cls(
            n_trees=data["n_trees"],
            max_features=data["max_features"],
            min_samples_leaf=data["min_samples_leaf"],
            max_depth=data["max_depth"],
        )
        model.trees = [DecisionTree.from_dict(t) for t in data["trees"]]
        return model
