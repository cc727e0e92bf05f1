"""Random forest and distance-weighted KNN baselines for multi-label
prediction over fingerprint or embedding features.

Forests are one ensemble per label (one-vs-rest): bagged CART trees with
Gini impurity splits (variance for regression) and random feature
subsets per split. Trees are stored as flat node arrays so checkpoints
are plain JSON.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np


@dataclass
class ForestConfig:
    n_trees: int = 500
    max_depth: int | None = None
    min_leaf: int = 1
    feature_fraction: float | None = None    # None means sqrt(n_features)
    bootstrap: bool = True
    seed: int = 0
    task: str = "classify"                   # or "regress"

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("need at least one tree")
        if self.feature_fraction is not None and not 0.0 < self.feature_fraction <= 1.0:
            raise ValueError("feature_fraction must be in (0, 1]")
        if self.task not in ("classify", "regress"):
            raise ValueError(f"unknown task {self.task!r}")


@dataclass
class _Tree:
    """Flat node arrays; leaves have feature == -1 and carry the estimate."""

    feature: list = field(default_factory=list)
    threshold: list = field(default_factory=list)
    left: list = field(default_factory=list)
    right: list = field(default_factory=list)
    value: list = field(default_factory=list)

    def add_node(self) -> int:
        for arr, fill in ((self.feature, -1), (self.threshold, 0.0),
                          (self.left, -1), (self.right, -1), (self.value, 0.0)):
            arr.append(fill)
        return len(self.feature) - 1

    def predict(self, X: np.ndarray) -> np.ndarray:
        feature = np.asarray(self.feature)
        threshold = np.asarray(self.threshold)
        left = np.asarray(self.left)
        right = np.asarray(self.right)
        value = np.asarray(self.value)
        node = np.zeros(len(X), dtype=np.intp)
        active = feature[node] >= 0
        while active.any():
            idx = np.flatnonzero(active)
            cur = node[idx]
            go_left = X[idx, feature[cur]] <= threshold[cur]
            node[idx] = np.where(go_left, left[cur], right[cur])
            active = feature[node] >= 0
        return value[node]


@dataclass
class Forest:
    config: ForestConfig
    n_features: int
    n_labels: int
    trees: list = field(default_factory=list)   # per label: list of _Tree


def _impurity_gain(sorted_y: np.ndarray, task: str):
    """Best split position in a sorted-by-feature label vector.

    Returns (position, gain) where position k means 'left gets the first
    k rows'. Uses cumulative sums so all candidate splits cost O(n).
    """
    n = len(sorted_y)
    csum = np.cumsum(sorted_y)
    total = csum[-1]
    left_n = np.arange(1, n)
    right_n = n - left_n
    left_sum = csum[:-1]
    right_sum = total - left_sum
    if task == "classify":
        # gini = 2p(1-p) per side, weighted; parent gini constant offset
        pl = left_sum / left_n
        pr = right_sum / right_n
        child = left_n * 2 * pl * (1 - pl) + right_n * 2 * pr * (1 - pr)
        p = total / n
        parent = n * 2 * p * (1 - p)
    else:
        csum2 = np.cumsum(sorted_y ** 2)
        total2 = csum2[-1]
        left2 = csum2[:-1]
        right2 = total2 - left2
        child = (left2 - left_sum ** 2 / left_n) + (right2 - right_sum ** 2 / right_n)
        parent = total2 - total ** 2 / n
    return parent - child


def _build_tree(X: np.ndarray, y: np.ndarray, cfg: ForestConfig,
                rng: np.random.Generator) -> _Tree:
    n_features = X.shape[1]
    if cfg.feature_fraction is None:
        k = max(1, int(round(math.sqrt(n_features))))
    else:
        k = max(1, int(round(cfg.feature_fraction * n_features)))
    tree = _Tree()
    root = tree.add_node()
    stack = [(root, np.arange(len(X)), 0)]
    while stack:
        node, rows, depth = stack.pop()
        ys = y[rows]
        leaf_value = float(ys.mean())
        if (
            len(rows) < 2 * cfg.min_leaf
            or (cfg.max_depth is not None and depth >= cfg.max_depth)
            or np.all(ys == ys[0])
        ):
            tree.value[node] = leaf_value
            continue
        feats = rng.choice(n_features, size=min(k, n_features), replace=False)
        best = None   # (gain, feature, threshold, sorted rows, split pos)
        for f in feats:
            xv = X[rows, f]
            order = np.argsort(xv, kind="stable")
            xs = xv[order]
            if xs[0] == xs[-1]:
                continue
            gains = _impurity_gain(y[rows][order], cfg.task)
            valid = (xs[1:] != xs[:-1])
            pos_ok = np.arange(1, len(rows))
            valid &= (pos_ok >= cfg.min_leaf) & (len(rows) - pos_ok >= cfg.min_leaf)
            if not valid.any():
                continue
            gains = np.where(valid, gains, -np.inf)
            pos = int(np.argmax(gains))
            if best is None or gains[pos] > best[0]:
                thr = (xs[pos] + xs[pos + 1]) / 2.0
                best = (gains[pos], int(f), float(thr), rows[order], pos + 1)
        if best is None or best[0] <= 0:
            tree.value[node] = leaf_value
            continue
        _, f, thr, sorted_rows, split = best
        tree.feature[node] = f
        tree.threshold[node] = thr
        left = tree.add_node()
        right = tree.add_node()
        tree.left[node] = left
        tree.right[node] = right
        stack.append((left, sorted_rows[:split], depth + 1))
        stack.append((right, sorted_rows[split:], depth + 1))
    return tree


def fit_random_forest(X: np.ndarray, Y: np.ndarray, cfg: ForestConfig) -> Forest:
    """One bagged ensemble per label column; deterministic given seed.

    Per-tree randomness is keyed by (seed, label, tree index), so fitting
    order (or parallel fitting) cannot change the result. Constant labels
    train to constant predictors.
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    if len(X) == 0:
        raise ValueError("empty training data")
    if len(X) != len(Y):
        raise ValueError("X and Y row counts differ")
    if not (np.isfinite(X).all() and np.isfinite(Y).all()):
        raise ValueError("training data must be finite")

    forest = Forest(config=cfg, n_features=X.shape[1], n_labels=Y.shape[1])
    for label in range(Y.shape[1]):
        ensemble = []
        for t in range(cfg.n_trees):
            rng = np.random.default_rng((cfg.seed, label, t))
            if cfg.bootstrap:
                rows = rng.integers(0, len(X), size=len(X))
            else:
                rows = np.arange(len(X))
            ensemble.append(_build_tree(X[rows], Y[rows, label], cfg, rng))
        forest.trees.append(ensemble)
    return forest


def rf_predict(forest: Forest, X: np.ndarray) -> np.ndarray:
    """Mean per-tree leaf estimate for each label; [n, n_labels]."""
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 1
    if single:
        X = X[None, :]
    if X.shape[1] != forest.n_features:
        raise ValueError(f"expected {forest.n_features} features, got {X.shape[1]}")
    out = np.zeros((len(X), forest.n_labels))
    for label, ensemble in enumerate(forest.trees):
        for tree in ensemble:
            out[:, label] += tree.predict(X)
        out[:, label] /= len(ensemble)
    return out[0] if single else out


def save_forest(forest: Forest, path):
    blob = {
        "format_version": 1,
        "model": "random_forest",
        "config": asdict(forest.config),
        "n_features": forest.n_features,
        "n_labels": forest.n_labels,
        "trees": [
            [asdict(tree) for tree in ensemble] for ensemble in forest.trees
        ],
    }
    with open(path, "w") as fh:
        json.dump(blob, fh)


def load_forest(path) -> Forest:
    with open(path) as fh:
        blob = json.load(fh)
    if blob.get("format_version") != 1 or blob.get("model") != "random_forest":
        raise ValueError("not a random forest checkpoint")
    forest = Forest(
        config=ForestConfig(**blob["config"]),
        n_features=blob["n_features"],
        n_labels=blob["n_labels"],
    )
    forest.trees = [
        [_Tree(**tree) for tree in ensemble] for ensemble in blob["trees"]
    ]
    return forest


# ---------------------------------------------------------------------------
# K nearest neighbors
# ---------------------------------------------------------------------------

_EPSILON = 1e-9


def _distances(train_X: np.ndarray, query: np.ndarray, metric: str) -> np.ndarray:
    if metric == "euclidean":
        return np.sqrt(((train_X - query) ** 2).sum(axis=1))
    if metric == "cosine":
        norms = np.linalg.norm(train_X, axis=1) * np.linalg.norm(query)
        if np.any(norms == 0):
            raise ValueError("cosine distance undefined for zero vectors")
        return 1.0 - (train_X @ query) / norms
    if metric == "jaccard":
        mins = np.minimum(train_X, query).sum(axis=1)
        maxs = np.maximum(train_X, query).sum(axis=1)
        sim = np.where(maxs > 0, mins / np.where(maxs > 0, maxs, 1), 1.0)
        return 1.0 - sim
    raise ValueError(f"unknown metric {metric!r}")


def knn_predict(train_X: np.ndarray, train_Y: np.ndarray, query: np.ndarray,
                k: int = 20, metric: str = "jaccard") -> np.ndarray:
    """Distance-weighted vote of the k nearest training rows.

    Weights are 1/(d + 1e-9), so exact matches dominate. Equal distances
    break ties toward the lower training index.
    """
    train_X = np.asarray(train_X, dtype=np.float64)
    train_Y = np.asarray(train_Y, dtype=np.float64)
    if len(train_X) == 0:
        raise ValueError("empty training set")
    if k > len(train_X):
        raise ValueError("k exceeds training set size")
    query = np.asarray(query, dtype=np.float64)
    single = query.ndim == 1
    if single:
        query = query[None, :]
    out = np.zeros((len(query), train_Y.shape[1] if train_Y.ndim > 1 else 1))
    Y = train_Y if train_Y.ndim > 1 else train_Y[:, None]
    for row, q in enumerate(query):
        d = _distances(train_X, q, metric)
        nearest = np.lexsort((np.arange(len(d)), d))[:k]
        w = 1.0 / (d[nearest] + _EPSILON)
        out[row] = (w[:, None] * Y[nearest]).sum(axis=0) / w.sum()
    return out[0] if single else out
