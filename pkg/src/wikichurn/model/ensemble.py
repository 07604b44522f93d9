"""Tree-family classifiers: single tree, random forest, AdaBoost, gradient boosting.

Label 1 is the missing class. Every model exposes ``predict_proba`` returning
the probability of label 1.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

from ..errors import LayoutMismatch, SingleClass
from .tree import Tree, grow_tree

KINDS = ("tree", "forest", "adaboost", "gboost")
KIND_NAMES = {
    "tree": "Decision Tree",
    "forest": "Random Forest",
    "adaboost": "AdaBoost",
    "gboost": "Gradient Boosting",
}
_MAX_ALPHA_ERR = 1e-10


@dataclass
class Hyperparams:
    n_estimators: int = 100
    max_depth: int = 6
    min_leaf: int = 2
    learning_rate: float = 0.1
    max_features: str | int | None = "sqrt"  # forest only

    @classmethod
    def from_dict(cls, d: dict[str, Any] | None) -> Hyperparams:
        d = d or {}
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown hyperparameters {sorted(unknown)}")
        return cls(**d)

    def resolve_max_features(self, d: int) -> int | None:
        mf = self.max_features
        if mf is None:
            return None
        if mf == "sqrt":
            return max(1, int(math.sqrt(d)))
        if mf == "log2":
            return max(1, int(math.log2(d))) if d > 1 else 1
        return max(1, min(d, int(mf)))


@dataclass
class TrainedModel:
    kind: str
    trees: list[Tree]
    tree_weights: list[float]
    n_features: int
    init_score: float = 0.0
    learning_rate: float = 1.0
    hyperparams: Hyperparams = field(default_factory=Hyperparams)
    seed: int = 0
    # pipeline context, filled by the training pipeline
    groups: tuple[str, ...] = ()
    feature_names: list[str] = field(default_factory=list)
    normalization: dict[str, list[float]] | None = None
    common_words: list[str] = field(default_factory=list)
    metrics: dict[str, Any] | None = None

    def _check(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise LayoutMismatch(f"model expects {self.n_features} columns, got {X.shape[-1] if X.ndim else 0}")
        return X

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        """Raw ensemble score (probability for tree/forest, margin for boosting)."""
        X = self._check(X)
        if self.kind == "tree":
            return self.trees[0].predict(X)
        if self.kind == "forest":
            acc = np.zeros(X.shape[0])
            for t in self.trees:
                acc += t.predict(X)
            return acc / len(self.trees)
        if self.kind == "adaboost":
            margin = np.zeros(X.shape[0])
            for t, alpha in zip(self.trees, self.tree_weights):
                margin += alpha * np.where(t.predict(X) > 0.5, 1.0, -1.0)
            return margin
        if self.kind == "gboost":
            f = np.full(X.shape[0], self.init_score)
            for t in self.trees:
                f += self.learning_rate * t.predict(X)
            return f
        raise ValueError(self.kind)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        score = self.decision_function(X)
        if self.kind == "adaboost":
            return _sigmoid(2.0 * score)
        if self.kind == "gboost":
            return _sigmoid(score)
        return score

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (self.predict_proba(X) > 0.5).astype(int)

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "n_features": self.n_features,
            "init_score": self.init_score,
            "learning_rate": self.learning_rate,
            "hyperparams": asdict(self.hyperparams),
            "seed": self.seed,
            "groups": list(self.groups),
            "feature_names": list(self.feature_names),
            "normalization": self.normalization,
            "common_words": list(self.common_words),
            "metrics": self.metrics,
            "tree_weights": [float(w) for w in self.tree_weights],
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> TrainedModel:
        return cls(
            kind=d["kind"],
            trees=[Tree.from_dict(t) for t in d["trees"]],
            tree_weights=[float(w) for w in d["tree_weights"]],
            n_features=int(d["n_features"]),
            init_score=float(d["init_score"]),
            learning_rate=float(d["learning_rate"]),
            hyperparams=Hyperparams(**d["hyperparams"]),
            seed=int(d["seed"]),
            groups=tuple(d.get("groups", ())),
            feature_names=list(d.get("feature_names", [])),
            normalization=d.get("normalization"),
            common_words=list(d.get("common_words", [])),
            metrics=d.get("metrics"),
        )


def _sigmoid(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def adaboost_alpha(weighted_error: float) -> float:
    """Stump weight of discrete two-class AdaBoost: ``0.5 * ln((1 - e) / e)``."""
    e = min(max(weighted_error, _MAX_ALPHA_ERR), 1.0 - _MAX_ALPHA_ERR)
    return 0.5 * math.log((1.0 - e) / e)


def tree_rng(seed: int, index: int) -> np.random.Generator:
    """Per-tree generator derived from (master seed, tree index)."""
    return np.random.default_rng([int(seed), int(index)])


def _fit_tree(X, y, hp: Hyperparams, seed: int) -> list[Tree]:
    return [grow_tree(X, y, classification=True, max_depth=hp.max_depth, min_leaf=hp.min_leaf)]


def _fit_forest(X, y, hp: Hyperparams, seed: int, workers: int = 1) -> list[Tree]:
    n, d = X.shape
    mf = hp.resolve_max_features(d)

    def one(t: int) -> Tree:
        rng = tree_rng(seed, t)
        idx = rng.integers(0, n, size=n)
        return grow_tree(
            X[idx], y[idx], classification=True, max_depth=hp.max_depth,
            min_leaf=hp.min_leaf, max_features=mf, rng=rng,
        )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, range(hp.n_estimators)))
    return [one(t) for t in range(hp.n_estimators)]


def _fit_adaboost(X, y, hp: Hyperparams, seed: int) -> tuple[list[Tree], list[float]]:
    n = X.shape[0]
    w = np.full(n, 1.0 / n)
    ysign = np.where(y == 1, 1.0, -1.0)
    trees: list[Tree] = []
    alphas: list[float] = []
    for _ in range(hp.n_estimators):
        stump = grow_tree(X, y, w, classification=True, max_depth=1, min_leaf=hp.min_leaf)
        h = np.where(stump.predict(X) > 0.5, 1.0, -1.0)
        err = float(w[h != ysign].sum() / w.sum())
        if err >= 0.5:
            if not trees:
                trees.append(stump)
                alphas.append(adaboost_alpha(min(err, 0.5)))
            break
        alpha = adaboost_alpha(err)
        trees.append(stump)
        alphas.append(alpha)
        if err <= 0.0:
            break
        w = w * np.exp(-alpha * ysign * h)
        w /= w.sum()
    return trees, alphas


def _fit_gboost(X, y, hp: Hyperparams, seed: int) -> tuple[list[Tree], float]:
    p0 = min(max(float(y.mean()), 1e-6), 1 - 1e-6)
    init = math.log(p0 / (1 - p0))
    f = np.full(X.shape[0], init)
    trees = []
    for _ in range(hp.n_estimators):
        p = _sigmoid(f)
        resid = y - p
        tree = grow_tree(X, resid, classification=False, max_depth=hp.max_depth, min_leaf=hp.min_leaf)
        leaves = tree.apply(X)
        hess = p * (1 - p)
        num = np.bincount(leaves, weights=resid, minlength=tree.n_nodes)
        den = np.bincount(leaves, weights=hess, minlength=tree.n_nodes)
        is_leaf = tree.feature < 0
        step = np.zeros(tree.n_nodes)
        np.divide(num, np.maximum(den, 1e-12), out=step, where=is_leaf)
        tree.value = np.where(is_leaf, step, 0.0)
        f = f + hp.learning_rate * tree.value[leaves]
        trees.append(tree)
    return trees, init


def train(
    kind: str,
    X: np.ndarray,
    y: np.ndarray,
    hyperparams: Hyperparams | None = None,
    seed: int = 0,
    workers: int = 1,
) -> TrainedModel:
    """Fit a classifier of ``kind`` (one of :data:`KINDS`) on 0/1 labels."""
    if kind not in KINDS:
        raise ValueError(f"unknown classifier kind {kind!r}; choose from {KINDS}")
    hp = hyperparams or Hyperparams()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be 2-D with one row per label")
    if not np.all(np.isfinite(X)):
        raise ValueError("training matrix contains non-finite values")
    if len(np.unique(y)) < 2:
        raise SingleClass("training labels contain a single class")
    weights: list[float]
    init, lr = 0.0, 1.0
    if kind == "tree":
        trees = _fit_tree(X, y, hp, seed)
        weights = [1.0]
    elif kind == "forest":
        trees = _fit_forest(X, y, hp, seed, workers)
        weights = [1.0] * len(trees)
    elif kind == "adaboost":
        trees, weights = _fit_adaboost(X, y, hp, seed)
    else:
        trees, init = _fit_gboost(X, y, hp, seed)
        weights = [1.0] * len(trees)
        lr = hp.learning_rate
    return TrainedModel(
        kind=kind, trees=trees, tree_weights=weights, n_features=X.shape[1],
        init_score=init, learning_rate=lr, hyperparams=hp, seed=seed,
    )
