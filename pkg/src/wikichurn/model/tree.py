"""Array-backed CART trees for binary classification and least-squares regression.

Splits send ``x <= threshold`` left, and the threshold is always an observed
training value (the largest one on the left), so a fitted tree's predictions
are unchanged by any strictly increasing transform applied to a column of both
the training and the scoring data.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

LEAF = -1
_MIN_GAIN = 1e-12


@dataclass
class Tree:
    feature: np.ndarray  # int, LEAF for leaves
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    weight: np.ndarray  # weighted sample count reaching the node
    impurity: np.ndarray  # gini (classification) or variance (regression)

    @property
    def n_nodes(self) -> int:
        return int(self.feature.shape[0])

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=int)
        for i in range(self.n_nodes):
            if self.feature[i] != LEAF:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def internal_nodes(self) -> np.ndarray:
        return np.flatnonzero(self.feature != LEAF)

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by every row of ``X``."""
        X = np.asarray(X, dtype=float)
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        active = self.feature[node] != LEAF
        while active.any():
            r = rows[active]
            n = node[active]
            go_left = X[r, self.feature[n]] <= self.threshold[n]
            node[r] = np.where(go_left, self.left[n], self.right[n])
            active = self.feature[node] != LEAF
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_dict(self) -> dict[str, Any]:
        return {
            "feature": self.feature.tolist(),
            "threshold": [float(v) for v in self.threshold],
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": [float(v) for v in self.value],
            "weight": [float(v) for v in self.weight],
            "impurity": [float(v) for v in self.impurity],
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> Tree:
        return cls(
            feature=np.asarray(d["feature"], dtype=np.int64),
            threshold=np.asarray(d["threshold"], dtype=float),
            left=np.asarray(d["left"], dtype=np.int64),
            right=np.asarray(d["right"], dtype=np.int64),
            value=np.asarray(d["value"], dtype=float),
            weight=np.asarray(d["weight"], dtype=float),
            impurity=np.asarray(d["impurity"], dtype=float),
        )


def _best_split(
    X: np.ndarray, y: np.ndarray, w: np.ndarray, feats: np.ndarray, min_leaf: int
) -> tuple[int, float, float] | None:
    """(feature, threshold, sse_after) minimising the children's weighted SSE."""
    m = X.shape[0]
    if m < 2 * min_leaf:
        return None
    Xf = X[:, feats]
    order = np.argsort(Xf, axis=0, kind="stable")
    xs = np.take_along_axis(Xf, order, axis=0)
    ws = w[order]
    wy = ws * y[order]
    wyy = wy * y[order]
    cw = np.cumsum(ws, axis=0)[:-1]
    cwy = np.cumsum(wy, axis=0)[:-1]
    cwyy = np.cumsum(wyy, axis=0)[:-1]
    tw, twy, twyy = cw[-1] + ws[-1], cwy[-1] + wy[-1], cwyy[-1] + wyy[-1]
    rw = tw - cw
    with np.errstate(divide="ignore", invalid="ignore"):
        sse = (cwyy - cwy**2 / cw) + ((twyy - cwyy) - (twy - cwy) ** 2 / rw)
    n_left = np.arange(1, m)[:, None]
    valid = (xs[:-1] < xs[1:]) & (n_left >= min_leaf) & (m - n_left >= min_leaf) & (cw > 0) & (rw > 0)
    if not valid.any():
        return None
    sse = np.where(valid, sse, np.inf)
    # feature-major flattening: ties go to the earliest candidate feature
    flat = int(np.argmin(sse.T))
    j, i = divmod(flat, m - 1)
    return int(feats[j]), float(xs[i, j]), float(sse[i, j])


def grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    sample_weight: np.ndarray | None = None,
    *,
    classification: bool = True,
    max_depth: int = 6,
    min_leaf: int = 2,
    max_features: int | None = None,
    rng: np.random.Generator | None = None,
) -> Tree:
    """Fit one tree by greedy weighted-variance reduction.

    For 0/1 targets weighted variance is half the weighted Gini impurity, so
    classification trees choose the Gini-optimal split. ``max_features`` draws
    a fresh feature subset at every node (random-forest style).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, d = X.shape
    w = np.ones(n) if sample_weight is None else np.asarray(sample_weight, dtype=float)
    if max_features is not None and max_features < d and rng is None:
        raise ValueError("feature subsampling needs an rng")

    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []
    weight: list[float] = []
    impurity: list[float] = []

    def new_node(idx: np.ndarray) -> tuple[int, float]:
        wi = w[idx]
        tw = float(wi.sum())
        mean = float(np.dot(wi, y[idx]) / tw) if tw > 0 else 0.0
        sse = float(np.dot(wi, (y[idx] - mean) ** 2))
        var = sse / tw if tw > 0 else 0.0
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(mean)
        weight.append(tw)
        impurity.append(2.0 * mean * (1.0 - mean) if classification else var)
        return len(feature) - 1, sse

    root, root_sse = new_node(np.arange(n))
    stack = [(root, np.arange(n), 0, root_sse)]
    while stack:
        node, idx, depth, sse = stack.pop()
        if depth >= max_depth or sse <= _MIN_GAIN:
            continue
        if max_features is not None and max_features < d:
            feats = np.sort(rng.choice(d, size=max_features, replace=False))
        else:
            feats = np.arange(d)
        found = _best_split(X[idx], y[idx], w[idx], feats, min_leaf)
        if found is None:
            continue
        j, thr, sse_after = found
        if sse - sse_after <= _MIN_GAIN * max(1.0, sse):
            continue
        mask = X[idx, j] <= thr
        li, ri = idx[mask], idx[~mask]
        lnode, lsse = new_node(li)
        rnode, rsse = new_node(ri)
        feature[node], threshold[node] = j, thr
        left[node], right[node] = lnode, rnode
        # right pushed first so the left subtree is expanded first
        stack.append((rnode, ri, depth + 1, rsse))
        stack.append((lnode, li, depth + 1, lsse))

    return Tree(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=float),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        value=np.asarray(value, dtype=float),
        weight=np.asarray(weight, dtype=float),
        impurity=np.asarray(impurity, dtype=float),
    )
