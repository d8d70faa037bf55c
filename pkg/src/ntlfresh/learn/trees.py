"""CART decision trees, random forests and gradient-boosted trees."""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ..rng import derive_seed, make_generator
from ._backend import kernels
from .metrics import SingleClassInput

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TreeParams:
    max_depth: int | None = None
    min_samples_split: int = 2
    min_samples_leaf: int = 1
    max_features_fraction: float = 1.0

    def __post_init__(self):
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be >= 0 or None")
        if self.min_samples_split < 2 or self.min_samples_leaf < 1:
            raise ValueError("min_samples_split >= 2 and min_samples_leaf >= 1 required")
        if not 0.0 < self.max_features_fraction <= 1.0:
            raise ValueError("max_features_fraction must lie in (0, 1]")

    def n_candidates(self, n_features: int) -> int:
        return max(1, math.ceil(self.max_features_fraction * n_features))


@dataclass(frozen=True)
class ForestParams(TreeParams):
    n_estimators: int = 100
    bootstrap: bool = True

    def __post_init__(self):
        super().__post_init__()
        if self.n_estimators < 1:
            raise ValueError("a forest needs at least one tree")

    def tree_params(self) -> TreeParams:
        return TreeParams(self.max_depth, self.min_samples_split, self.min_samples_leaf,
                          self.max_features_fraction)


@dataclass(frozen=True)
class GBTParams:
    n_estimators: int = 100
    learning_rate: float = 0.1
    max_depth: int = 3

    def __post_init__(self):
        if self.n_estimators < 0 or self.learning_rate < 0 or self.max_depth < 0:
            raise ValueError("GBT hyperparameters must be non-negative")


@dataclass
class Tree:
    """Flat preorder tree; ``feature == -1`` marks leaves."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    count: np.ndarray

    @property
    def n_nodes(self) -> int:
        return int(self.feature.shape[0])

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def apply(self, X) -> np.ndarray:
        return kernels.apply_tree(np.ascontiguousarray(X, dtype=np.float64), self.feature,
                                  self.threshold, self.left, self.right)

    def predict(self, X) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_dict(self) -> dict:
        return {k: getattr(self, k).tolist() for k in
                ("feature", "threshold", "left", "right", "value", "count")}

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        return cls(np.asarray(d["feature"], dtype=np.int64),
                   np.asarray(d["threshold"], dtype=np.float64),
                   np.asarray(d["left"], dtype=np.int64), np.asarray(d["right"], dtype=np.int64),
                   np.asarray(d["value"], dtype=np.float64), np.asarray(d["count"], dtype=np.int64))

    @classmethod
    def leaf(cls, value: float, count: int) -> "Tree":
        return cls(np.array([-1]), np.array([0.0]), np.array([-1]), np.array([-1]),
                   np.array([float(value)]), np.array([count]))


def grow_tree(X, target, samples, params: TreeParams, criterion: int, seed: int,
              row_order=None):
    """Run the kernel; returns ``(Tree, leaf_of_sample)``. ``row_order`` from
    ``kernels.sort_rows(X)`` speeds up repeated trees on the same ``X``."""
    out = kernels.build_tree(X, target, samples, criterion,
                             -1 if params.max_depth is None else params.max_depth,
                             params.min_samples_split, params.min_samples_leaf,
                             params.n_candidates(X.shape[1]), seed, row_order)
    return Tree(*out[:6]), out[6]


def _check_xy(X, y):
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y).astype(np.float64)
    if X.ndim != 2 or X.shape[0] != y.shape[0] or X.shape[0] == 0:
        raise ValueError("X must be 2-D with one row per label")
    if not np.isin(y, (0.0, 1.0)).all():
        raise ValueError("labels must be 0/1")
    return X, y


@dataclass
class TreeEnsembleModel:
    """Trees whose leaf values are averaged (DT is a one-tree ensemble)."""

    kind: str
    params: object
    trees: list[Tree]
    threshold: float = 0.5

    def decision_score(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        total = np.zeros(X.shape[0])
        for tree in self.trees:
            total += tree.predict(X)
        return total / len(self.trees)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": asdict(self.params), "threshold": self.threshold,
                "trees": [t.to_dict() for t in self.trees]}


def _constant_if_single_class(kind, params, y):
    if np.unique(y).shape[0] < 2:
        logger.warning("%s trained on a single class; returning a constant model", kind)
        return TreeEnsembleModel(kind, params, [Tree.leaf(y[0], y.shape[0])])
    return None


def train_decision_tree(X, y, params: TreeParams = TreeParams(), seed: int = 0):
    """Gini CART; leaf score is the positive fraction.

    Single-class input yields a constant model instead of raising.
    """
    X, y = _check_xy(X, y)
    const = _constant_if_single_class("dt", params, y)
    if const is not None:
        return const
    tree, _ = grow_tree(X, y, np.arange(X.shape[0]), params, kernels.GINI,
                        derive_seed(seed, "tree", 0))
    return TreeEnsembleModel("dt", params, [tree])


def train_random_forest(X, y, params: ForestParams = ForestParams(), seed: int = 0):
    X, y = _check_xy(X, y)
    const = _constant_if_single_class("rf", params, y)
    if const is not None:
        return const
    n = X.shape[0]
    tree_params = params.tree_params()
    row_order = kernels.sort_rows(X)
    trees = []
    for t in range(params.n_estimators):
        if params.bootstrap:
            samples = make_generator(derive_seed(seed, "bootstrap", t)).integers(0, n, n)
        else:
            samples = np.arange(n)
        tree, _ = grow_tree(X, y, samples, tree_params, kernels.GINI, derive_seed(seed, "tree", t),
                            row_order)
        trees.append(tree)
    return TreeEnsembleModel("rf", params, trees)


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class GBTModel:
    params: GBTParams
    prior: float
    trees: list[Tree] = field(default_factory=list)
    kind: str = "gbt"
    threshold: float = 0.5
    train_loss: list[float] = field(default_factory=list)

    def raw_score(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        F = np.full(X.shape[0], self.prior)
        for tree in self.trees:
            F += self.params.learning_rate * tree.predict(X)
        return F

    def decision_score(self, X) -> np.ndarray:
        return sigmoid(self.raw_score(X))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": asdict(self.params), "prior": self.prior,
                "threshold": self.threshold, "trees": [t.to_dict() for t in self.trees]}


def _logloss_from_raw(F, y):
    # log(1 + exp(-s)) with s = (2y - 1) F, computed stably
    s = (2.0 * y - 1.0) * F
    return float(np.mean(np.logaddexp(0.0, -s)))


def train_gbt(X, y, params: GBTParams = GBTParams(), seed: int = 0):
    """Logistic-loss boosting of squared-error regression trees with one
    Newton step per leaf. ``train_loss[s]`` is the training loss after ``s``
    stages."""
    X, y = _check_xy(X, y)
    if np.unique(y).shape[0] < 2:
        raise SingleClassInput("gradient boosting needs both classes")
    n = X.shape[0]
    base = float(y.mean())
    prior = math.log(base / (1.0 - base))
    model = GBTModel(params, prior)
    F = np.full(n, prior)
    model.train_loss.append(_logloss_from_raw(F, y))
    tree_params = TreeParams(max_depth=params.max_depth)
    samples = np.arange(n)
    row_order = kernels.sort_rows(X)
    for stage in range(params.n_estimators):
        p = sigmoid(F)
        residual = y - p
        tree, leaf_of = grow_tree(X, residual, samples, tree_params, kernels.MSE,
                                  derive_seed(seed, "stage", stage), row_order)
        num = np.bincount(leaf_of, weights=residual, minlength=tree.n_nodes)
        den = np.bincount(leaf_of, weights=p * (1.0 - p), minlength=tree.n_nodes)
        leaves = tree.feature < 0
        value = np.zeros(tree.n_nodes)
        ok = leaves & (den > 1e-150)
        value[ok] = num[ok] / den[ok]
        tree.value = value
        F = F + params.learning_rate * value[leaf_of]
        model.trees.append(tree)
        model.train_loss.append(_logloss_from_raw(F, y))
    return model
