"""Second-order regularized gradient-boosted regression trees.

Two tree shapes share one boosting engine: depth-wise exact greedy trees and
oblivious trees (one feature/threshold per level, shared across the level).
The loss convention is 0.5 * (y - yhat)^2, so hessians are exactly 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _treekernels as tk
from .errors import DegenerateDenominator, DegenerateInput, DimensionMismatch

TREE_SHAPES = ("axis", "oblivious")
OBLIVIOUS_LEVEL_CAP = 12  # 4096 leaves; the gain > 0 rule stops far earlier


@dataclass(frozen=True)
class BoostHyperParams:
    n_estimators: int
    learning_rate: float = 0.1
    max_depth: int = 6
    reg_lambda: float = 1.0
    gamma_complexity: float = 0.0
    subsample: float = 1.0
    colsample_bytree: float = 1.0
    min_child_weight: float = 1.0
    tree_shape: str = "axis"
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "n_estimators", int(self.n_estimators))
        object.__setattr__(self, "max_depth", int(self.max_depth))
        object.__setattr__(self, "seed", int(self.seed))
        for name in ("learning_rate", "reg_lambda", "gamma_complexity",
                     "subsample", "colsample_bytree", "min_child_weight"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not 1 <= self.n_estimators <= 10_000:
            raise ValueError("n_estimators must be in [1, 10000]")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError("learning_rate must be in (0, 1]")
        if self.max_depth < 1:
            raise ValueError("max_depth must be positive")
        if self.reg_lambda < 0 or self.gamma_complexity < 0:
            raise ValueError("regularization constants must be >= 0")
        if not 0.0 < self.subsample <= 1.0:
            raise ValueError("subsample must be in (0, 1]")
        if not 0.0 < self.colsample_bytree <= 1.0:
            raise ValueError("colsample_bytree must be in (0, 1]")
        if self.min_child_weight < 0:
            raise ValueError("min_child_weight must be >= 0")
        if self.tree_shape not in TREE_SHAPES:
            raise ValueError(f"tree_shape must be one of {TREE_SHAPES}")


@dataclass(frozen=True)
class GradHess:
    g: np.ndarray
    h: np.ndarray


def grad_hess_squared(y, pred) -> GradHess:
    """Gradient/hessian of 0.5 * (y - yhat)^2: g = pred - y, h = 1."""
    y = np.asarray(y, dtype=np.float64).ravel()
    pred = np.asarray(pred, dtype=np.float64).ravel()
    if y.shape != pred.shape:
        raise DimensionMismatch("y and pred must have equal length")
    return GradHess(g=pred - y, h=np.ones_like(y))


def leaf_weight(g_sum: float, h_sum: float, reg_lambda: float) -> float:
    """Optimal leaf score -G / (H + lambda)."""
    denom = h_sum + reg_lambda
    if denom <= 0:
        raise DegenerateDenominator("H + lambda must be positive")
    return -g_sum / denom


def split_gain(gl, hl, gr, hr, reg_lambda, gamma_complexity) -> float:
    """Objective reduction of a split, minus the per-leaf penalty."""
    if hl + reg_lambda <= 0 or hr + reg_lambda <= 0 or hl + hr + reg_lambda <= 0:
        raise DegenerateDenominator("child hessian sums plus lambda must be positive")
    return 0.5 * (gl * gl / (hl + reg_lambda)
                  + gr * gr / (hr + reg_lambda)
                  - (gl + gr) ** 2 / (hl + hr + reg_lambda)) - gamma_complexity


@dataclass(frozen=True)
class AxisTree:
    """Array-encoded binary tree; feature == -1 marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    weight: np.ndarray

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature < 0))

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Leaf node index per query row."""
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        out = np.empty(x.shape[0], dtype=np.int64)
        for r in range(x.shape[0]):
            node = 0
            while self.feature[node] >= 0:
                if x[r, self.feature[node]] <= self.threshold[node]:
                    node = self.left[node]
                else:
                    node = self.right[node]
            out[r] = node
        return out

    def values(self, x: np.ndarray) -> np.ndarray:
        return self.weight[self.apply(x)]

    def to_dict(self) -> dict:
        nodes = []
        for i in range(self.feature.shape[0]):
            if self.feature[i] < 0:
                nodes.append({"weight": float(self.weight[i]).hex()})
            else:
                nodes.append({
                    "feature": int(self.feature[i]),
                    "threshold": float(self.threshold[i]).hex(),
                    "left": int(self.left[i]),
                    "right": int(self.right[i]),
                })
        return {"kind": "axis", "nodes": nodes}

    @classmethod
    def from_dict(cls, d: dict) -> "AxisTree":
        nodes = d["nodes"]
        n = len(nodes)
        feature = np.full(n, -1, dtype=np.int64)
        threshold = np.zeros(n)
        left = np.zeros(n, dtype=np.int64)
        right = np.zeros(n, dtype=np.int64)
        weight = np.zeros(n)
        for i, node in enumerate(nodes):
            if "weight" in node:
                weight[i] = float.fromhex(node["weight"])
            else:
                feature[i] = node["feature"]
                threshold[i] = float.fromhex(node["threshold"])
                left[i] = node["left"]
                right[i] = node["right"]
        return cls(feature, threshold, left, right, weight)


@dataclass(frozen=True)
class ObliviousTree:
    """One (feature, threshold) per level; leaf index is the bit pattern of
    the go-right decisions, empty cells carry weight 0."""

    level_features: np.ndarray
    level_thresholds: np.ndarray
    leaf_weights: np.ndarray

    @property
    def n_levels(self) -> int:
        return int(self.level_features.shape[0])

    @property
    def n_leaves(self) -> int:
        return int(self.leaf_weights.shape[0])

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        code = np.zeros(x.shape[0], dtype=np.int64)
        for f, t in zip(self.level_features, self.level_thresholds):
            code = code * 2 + (x[:, f] > t)
        return code

    def values(self, x: np.ndarray) -> np.ndarray:
        return self.leaf_weights[self.apply(x)]

    def to_dict(self) -> dict:
        return {
            "kind": "oblivious",
            "levels": [[int(f), float(t).hex()]
                       for f, t in zip(self.level_features, self.level_thresholds)],
            "leaf_weights": [float(w).hex() for w in self.leaf_weights],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ObliviousTree":
        feats = np.array([f for f, _ in d["levels"]], dtype=np.int64)
        thrs = np.array([float.fromhex(t) for _, t in d["levels"]])
        weights = np.array([float.fromhex(w) for w in d["leaf_weights"]])
        return cls(feats, thrs, weights)


RegressionTree = AxisTree | ObliviousTree


@dataclass
class BoostedEnsemble:
    base_score: float
    trees: tuple
    hyper: BoostHyperParams
    training_mse: np.ndarray | None = field(default=None, repr=False)
    _flat: tuple | None = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        h = self.hyper
        return {
            "hyper": {
                "n_estimators": h.n_estimators,
                "learning_rate": h.learning_rate.hex(),
                "max_depth": h.max_depth,
                "reg_lambda": h.reg_lambda.hex(),
                "gamma_complexity": h.gamma_complexity.hex(),
                "subsample": h.subsample.hex(),
                "colsample_bytree": h.colsample_bytree.hex(),
                "min_child_weight": h.min_child_weight.hex(),
                "tree_shape": h.tree_shape,
                "seed": h.seed,
            },
            "base_score": self.base_score.hex(),
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BoostedEnsemble":
        hd = d["hyper"]
        hyper = BoostHyperParams(
            n_estimators=hd["n_estimators"],
            learning_rate=float.fromhex(hd["learning_rate"]),
            max_depth=hd["max_depth"],
            reg_lambda=float.fromhex(hd["reg_lambda"]),
            gamma_complexity=float.fromhex(hd["gamma_complexity"]),
            subsample=float.fromhex(hd["subsample"]),
            colsample_bytree=float.fromhex(hd["colsample_bytree"]),
            min_child_weight=float.fromhex(hd["min_child_weight"]),
            tree_shape=hd["tree_shape"],
            seed=hd["seed"],
        )
        maker = AxisTree if hyper.tree_shape == "axis" else ObliviousTree
        trees = tuple(maker.from_dict(t) for t in d["trees"])
        return cls(base_score=float.fromhex(d["base_score"]), trees=trees, hyper=hyper)


def _round_half_up(v: float) -> int:
    return int(math.floor(v + 0.5))


def build_tree(x: np.ndarray, grad: GradHess, hyper: BoostHyperParams,
               rng: np.random.Generator | None = None) -> RegressionTree:
    """Build one tree on already-row-sampled data; the column sample (if any)
    is drawn from `rng`."""
    x = np.ascontiguousarray(np.atleast_2d(np.asarray(x, dtype=np.float64)))
    g = np.ascontiguousarray(grad.g, dtype=np.float64)
    h = np.ascontiguousarray(grad.h, dtype=np.float64)
    m, d = x.shape
    if m < 1:
        raise DegenerateInput("tree building needs at least one row")
    if g.shape[0] != m or h.shape[0] != m:
        raise DimensionMismatch("gradient length must match row count")
    if rng is not None and hyper.colsample_bytree < 1.0:
        csub = max(1, _round_half_up(hyper.colsample_bytree * d))
        cols = np.sort(rng.permutation(d)[:csub]).astype(np.int64)
    else:
        cols = np.arange(d, dtype=np.int64)

    if hyper.tree_shape == "axis":
        max_nodes = _axis_node_cap(m, hyper.max_depth)
        feat = np.full(max_nodes, -1, dtype=np.int64)
        thr = np.zeros(max_nodes)
        left = np.zeros(max_nodes, dtype=np.int64)
        right = np.zeros(max_nodes, dtype=np.int64)
        wgt = np.zeros(max_nodes)
        nn = tk._build_axis(x, g, h, cols, hyper.max_depth, hyper.reg_lambda,
                            hyper.gamma_complexity, hyper.min_child_weight,
                            feat, thr, left, right, wgt)
        return AxisTree(feat[:nn].copy(), thr[:nn].copy(), left[:nn].copy(),
                        right[:nn].copy(), wgt[:nn].copy())

    cap = min(hyper.max_depth, OBLIVIOUS_LEVEL_CAP)
    lvl_feat = np.zeros(cap, dtype=np.int64)
    lvl_thr = np.zeros(cap)
    leaf_w = np.zeros(1 << cap)
    levels = tk._build_oblivious(x, g, h, cols, cap, hyper.reg_lambda,
                                 hyper.gamma_complexity, lvl_feat, lvl_thr, leaf_w)
    return ObliviousTree(lvl_feat[:levels].copy(), lvl_thr[:levels].copy(),
                         leaf_w[: 1 << levels].copy())


def _axis_node_cap(m: int, max_depth: int) -> int:
    by_rows = max(2 * m - 1, 1)
    by_depth = (1 << (min(max_depth, 20) + 1)) - 1
    return min(by_rows, by_depth)


def fit(x: np.ndarray, y: np.ndarray, hyper: BoostHyperParams) -> BoostedEnsemble:
    """Boost from base_score = mean(y); each round draws a fresh deterministic
    row/column sample, builds one tree on it, and updates predictions on all
    rows by learning_rate times the tree output."""
    x = np.ascontiguousarray(np.atleast_2d(np.asarray(x, dtype=np.float64)))
    y = np.ascontiguousarray(np.asarray(y, dtype=np.float64).ravel())
    n, d = x.shape
    if n < 2:
        raise DegenerateInput("boosting needs at least 2 samples")
    if y.shape[0] != n:
        raise DimensionMismatch("x and y row counts differ")

    k = hyper.n_estimators
    msub = max(1, _round_half_up(hyper.subsample * n))
    csub = max(1, _round_half_up(hyper.colsample_bytree * d))
    rng = np.random.default_rng(hyper.seed)
    row_idx = np.ascontiguousarray(
        np.argsort(rng.random((k, n)), axis=1)[:, :msub].astype(np.int64))
    col_idx = np.ascontiguousarray(
        np.sort(np.argsort(rng.random((k, d)), axis=1)[:, :csub], axis=1).astype(np.int64))
    base = float(y.mean())

    if hyper.tree_shape == "axis":
        max_nodes = _axis_node_cap(msub, hyper.max_depth)
        feat = np.full((k, max_nodes), -1, dtype=np.int64)
        thr = np.zeros((k, max_nodes))
        left = np.zeros((k, max_nodes), dtype=np.int64)
        right = np.zeros((k, max_nodes), dtype=np.int64)
        wgt = np.zeros((k, max_nodes))
        n_nodes = np.zeros(k, dtype=np.int64)
        _, mse_path = tk._boost_axis(
            x, y, row_idx, col_idx, hyper.max_depth, hyper.reg_lambda,
            hyper.gamma_complexity, hyper.min_child_weight, hyper.learning_rate,
            base, feat, thr, left, right, wgt, n_nodes)
        trees = tuple(
            AxisTree(feat[i, :n_nodes[i]].copy(), thr[i, :n_nodes[i]].copy(),
                     left[i, :n_nodes[i]].copy(), right[i, :n_nodes[i]].copy(),
                     wgt[i, :n_nodes[i]].copy())
            for i in range(k))
        flat = ("axis", feat, thr, left, right, wgt)
    else:
        cap = min(hyper.max_depth, OBLIVIOUS_LEVEL_CAP)
        lvl_feat = np.zeros((k, max(cap, 1)), dtype=np.int64)
        lvl_thr = np.zeros((k, max(cap, 1)))
        leaf_w = np.zeros((k, 1 << cap))
        n_levels = np.zeros(k, dtype=np.int64)
        _, mse_path = tk._boost_oblivious(
            x, y, row_idx, col_idx, cap, hyper.reg_lambda,
            hyper.gamma_complexity, hyper.learning_rate, base,
            lvl_feat, lvl_thr, leaf_w, n_levels)
        trees = tuple(
            ObliviousTree(lvl_feat[i, :n_levels[i]].copy(),
                          lvl_thr[i, :n_levels[i]].copy(),
                          leaf_w[i, : 1 << n_levels[i]].copy())
            for i in range(k))
        flat = ("oblivious", lvl_feat, lvl_thr, leaf_w, n_levels)

    return BoostedEnsemble(base_score=base, trees=trees, hyper=hyper,
                           training_mse=mse_path, _flat=flat)


def _flatten(ensemble: BoostedEnsemble) -> tuple:
    if ensemble._flat is not None:
        return ensemble._flat
    trees = ensemble.trees
    k = len(trees)
    if ensemble.hyper.tree_shape == "axis":
        maxn = max((t.feature.shape[0] for t in trees), default=1)
        feat = np.full((k, maxn), -1, dtype=np.int64)
        thr = np.zeros((k, maxn))
        left = np.zeros((k, maxn), dtype=np.int64)
        right = np.zeros((k, maxn), dtype=np.int64)
        wgt = np.zeros((k, maxn))
        for i, t in enumerate(trees):
            nn = t.feature.shape[0]
            feat[i, :nn] = t.feature
            thr[i, :nn] = t.threshold
            left[i, :nn] = t.left
            right[i, :nn] = t.right
            wgt[i, :nn] = t.weight
        ensemble._flat = ("axis", feat, thr, left, right, wgt)
    else:
        maxl = max((t.n_levels for t in trees), default=0)
        lvl_feat = np.zeros((k, max(maxl, 1)), dtype=np.int64)
        lvl_thr = np.zeros((k, max(maxl, 1)))
        leaf_w = np.zeros((k, 1 << maxl))
        n_levels = np.zeros(k, dtype=np.int64)
        for i, t in enumerate(trees):
            n_levels[i] = t.n_levels
            lvl_feat[i, :t.n_levels] = t.level_features
            lvl_thr[i, :t.n_levels] = t.level_thresholds
            leaf_w[i, :t.n_leaves] = t.leaf_weights
        ensemble._flat = ("oblivious", lvl_feat, lvl_thr, leaf_w, n_levels)
    return ensemble._flat


def predict_batch(ensemble: BoostedEnsemble, x: np.ndarray) -> np.ndarray:
    x = np.ascontiguousarray(np.atleast_2d(np.asarray(x, dtype=np.float64)))
    if len(ensemble.trees) == 0:
        return np.full(x.shape[0], ensemble.base_score)
    flat = _flatten(ensemble)
    lr = ensemble.hyper.learning_rate
    if flat[0] == "axis":
        _, feat, thr, left, right, wgt = flat
        if np.any(feat >= x.shape[1]):
            raise DimensionMismatch("query has fewer features than the trees reference")
        return tk._predict_axis_ensemble(x, ensemble.base_score, lr,
                                         feat, thr, left, right, wgt)
    _, lvl_feat, lvl_thr, leaf_w, n_levels = flat
    if np.any(lvl_feat >= x.shape[1]):
        raise DimensionMismatch("query has fewer features than the trees reference")
    return tk._predict_oblivious_ensemble(x, ensemble.base_score, lr,
                                          lvl_feat, lvl_thr, leaf_w, n_levels)


def predict(ensemble: BoostedEnsemble, x) -> float:
    """Single-row prediction: base_score + learning_rate * sum of tree outputs."""
    x = np.asarray(x, dtype=np.float64).ravel()
    return float(predict_batch(ensemble, x[None, :])[0])
