"""Train/test splitting and weighted classification metrics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from ..errors import TooSmall

MIN_ROWS = 5


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    seed: int = 0
    stratified: bool = True

    def __post_init__(self) -> None:
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


def _allocate(sizes: list[int], total: int) -> list[int]:
    """Largest-remainder apportionment of ``total`` test rows across classes."""
    n = sum(sizes)
    quotas = [s * total / n for s in sizes]
    alloc = [int(q) for q in quotas]
    order = sorted(range(len(sizes)), key=lambda i: (-(quotas[i] - alloc[i]), i))
    for i in order[: total - sum(alloc)]:
        alloc[i] += 1
    return alloc


def split(labels: np.ndarray, spec: SplitSpec) -> tuple[np.ndarray, np.ndarray]:
    """Sorted (train, test) row indices; a disjoint, exhaustive partition."""
    y = np.asarray(labels)
    n = y.shape[0]
    if n < MIN_ROWS:
        raise TooSmall(f"need at least {MIN_ROWS} rows to split, got {n}")
    n_test = int(round(n * (1.0 - spec.train_fraction)))
    n_test = min(max(n_test, 1), n - 1)
    rng = np.random.default_rng(spec.seed)
    if spec.stratified:
        classes = np.unique(y)
        members = [np.flatnonzero(y == c) for c in classes]
        alloc = _allocate([len(m) for m in members], n_test)
        test = np.concatenate([rng.permutation(m)[:a] for m, a in zip(members, alloc)])
    else:
        test = rng.permutation(n)[:n_test]
    mask = np.zeros(n, dtype=bool)
    mask[test] = True
    return np.flatnonzero(~mask), np.flatnonzero(mask)


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    confusion: tuple[tuple[int, int], tuple[int, int]]  # rows: true 0/1, cols: predicted 0/1

    @property
    def n(self) -> int:
        return sum(map(sum, self.confusion))

    def to_dict(self) -> dict[str, Any]:
        return {
            "accuracy": self.accuracy,
            "weighted_precision": self.weighted_precision,
            "weighted_recall": self.weighted_recall,
            "weighted_f1": self.weighted_f1,
            "confusion": [list(r) for r in self.confusion],
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> EvalReport:
        c = d["confusion"]
        return cls(
            accuracy=float(d["accuracy"]),
            weighted_precision=float(d["weighted_precision"]),
            weighted_recall=float(d["weighted_recall"]),
            weighted_f1=float(d["weighted_f1"]),
            confusion=((int(c[0][0]), int(c[0][1])), (int(c[1][0]), int(c[1][1]))),
        )


def _ratio(a: float, b: float) -> float:
    return a / b if b else 0.0


def report_from_confusion(confusion) -> EvalReport:
    """Weighted metrics from a 2x2 confusion matrix (weights are true-class supports)."""
    c = np.asarray(confusion, dtype=np.int64).reshape(2, 2)
    total = int(c.sum())
    support = c.sum(axis=1)
    predicted = c.sum(axis=0)
    prec, rec, f1 = [], [], []
    for k in (0, 1):
        tp = c[k, k]
        p = _ratio(tp, predicted[k])
        r = _ratio(tp, support[k])
        prec.append(p)
        rec.append(r)
        f1.append(_ratio(2 * p * r, p + r))

    def weighted(vals: list[float]) -> float:
        return float(sum(s * v for s, v in zip(support, vals)) / total) if total else 0.0

    return EvalReport(
        accuracy=_ratio(float(np.trace(c)), total),
        weighted_precision=weighted(prec),
        weighted_recall=weighted(rec),
        weighted_f1=weighted(f1),
        confusion=((int(c[0, 0]), int(c[0, 1])), (int(c[1, 0]), int(c[1, 1]))),
    )


def confusion_matrix(y_true: np.ndarray, y_pred: np.ndarray) -> np.ndarray:
    y_true = np.asarray(y_true, dtype=int)
    y_pred = np.asarray(y_pred, dtype=int)
    c = np.zeros((2, 2), dtype=np.int64)
    np.add.at(c, (y_true, y_pred), 1)
    return c


def evaluate(model, X: np.ndarray, y: np.ndarray) -> EvalReport:
    """Score ``model`` on a held-out matrix (raises LayoutMismatch on width mismatch)."""
    pred = model.predict(X)
    return report_from_confusion(confusion_matrix(y, pred))
