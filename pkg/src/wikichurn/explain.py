"""Global and local explanations of trained tree-family models.

Three global rankings are available: impurity decrease (Gini), permutation
accuracy drop, and the mean absolute weight of per-instance local linear
surrogates. ``project_2d`` emits principal-component coordinates for plotting.
"""

from __future__ import annotations

import csv
import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .errors import DegenerateBackground, LayoutMismatch, NoSplits, RankDeficient
from .model.ensemble import TrainedModel
from .model.tree import LEAF

DEFAULT_SAMPLES = 5000
DEFAULT_KERNEL_WIDTH = 0.75
DEFAULT_RIDGE = 1.0
DEFAULT_TOP_K = 5


class Method(str, enum.Enum):
    GINI = "gini"
    PERMUTATION = "permutation"
    LOCAL_SURROGATE = "local_surrogate"


@dataclass(frozen=True)
class ImportanceRanking:
    method: Method
    entries: tuple[tuple[str, float], ...]  # descending by score

    @classmethod
    def from_scores(cls, method: Method, names: Sequence[str], scores: np.ndarray) -> ImportanceRanking:
        # stable sort keeps column order among ties
        order = np.argsort(-np.asarray(scores, dtype=float), kind="stable")
        return cls(method, tuple((names[i], float(scores[i])) for i in order))

    def top(self, k: int) -> list[str]:
        return [name for name, _ in self.entries[:k]]

    def score(self, name: str) -> float:
        return dict(self.entries)[name]


@dataclass(frozen=True)
class LocalExplanation:
    editor: str
    top_features: tuple[tuple[str, float], ...]
    surrogate_fit_r2: float
    weights: np.ndarray = field(repr=False, compare=False)
    intercept: float = 0.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "editor": self.editor,
            "top_features": [[n, w] for n, w in self.top_features],
            "surrogate_fit_r2": self.surrogate_fit_r2,
        }


def _names(model: TrainedModel, names: Sequence[str] | None) -> list[str]:
    if names is not None:
        return list(names)
    if model.feature_names:
        return list(model.feature_names)
    return [f"x{j}" for j in range(model.n_features)]


def _check_width(model: TrainedModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise LayoutMismatch(f"model expects {model.n_features} columns")
    return X


def tree_impurity_decrease(tree, n_features: int) -> np.ndarray:
    out = np.zeros(n_features)
    for i in np.flatnonzero(tree.feature != LEAF):
        l, r = tree.left[i], tree.right[i]
        dec = (
            tree.weight[i] * tree.impurity[i]
            - tree.weight[l] * tree.impurity[l]
            - tree.weight[r] * tree.impurity[r]
        )
        out[tree.feature[i]] += max(dec, 0.0)
    return out


def gini_importance(model: TrainedModel, names: Sequence[str] | None = None) -> ImportanceRanking:
    """Impurity decrease per feature, normalised per tree, averaged with the tree weights."""
    total = np.zeros(model.n_features)
    for tree, w in zip(model.trees, model.tree_weights):
        dec = tree_impurity_decrease(tree, model.n_features)
        s = dec.sum()
        if s > 0:
            total += abs(w) * dec / s
    if total.sum() <= 0:
        raise NoSplits("model contains no informative split")
    return ImportanceRanking.from_scores(Method.GINI, _names(model, names), total / total.sum())


def permutation_importance(
    model: TrainedModel,
    X: np.ndarray,
    y: np.ndarray,
    repeats: int = 10,
    seed: int = 0,
    names: Sequence[str] | None = None,
) -> ImportanceRanking:
    """Mean accuracy drop when one column is shuffled; negative drops are kept."""
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    X = _check_width(model, X)
    y = np.asarray(y, dtype=int)
    # integer hit counts keep an unchanged column's drop at exactly 0
    baseline = int(np.sum(model.predict(X) == y))
    drops = np.zeros(model.n_features)
    for j in range(model.n_features):
        rng = np.random.default_rng([seed, j])
        Xp = X.copy()
        hits = 0
        for _ in range(repeats):
            Xp[:, j] = X[rng.permutation(X.shape[0]), j]
            hits += int(np.sum(model.predict(Xp) == y))
        drops[j] = (baseline * repeats - hits) / (repeats * max(len(y), 1))
    return ImportanceRanking.from_scores(Method.PERMUTATION, _names(model, names), drops)


def local_surrogate(
    model: TrainedModel,
    instance: np.ndarray,
    background: np.ndarray,
    n_samples: int = DEFAULT_SAMPLES,
    kernel_width: float = DEFAULT_KERNEL_WIDTH,
    k: int = DEFAULT_TOP_K,
    ridge: float = DEFAULT_RIDGE,
    seed: int = 0,
    names: Sequence[str] | None = None,
    editor: str = "",
) -> LocalExplanation:
    """Weighted ridge fit of the model's probabilities around ``instance``.

    Each perturbation draws every feature independently from the background
    column, and is weighted by ``exp(-d**2 / w**2)`` where ``d`` is its distance
    to the instance and ``w = kernel_width * sqrt(n_features)``.
    """
    if n_samples < 100:
        raise ValueError("n_samples must be >= 100")
    B = _check_width(model, background)
    x = np.asarray(instance, dtype=float).reshape(-1)
    if x.shape[0] != model.n_features:
        raise LayoutMismatch(f"instance has {x.shape[0]} values, model expects {model.n_features}")
    if np.unique(B, axis=0).shape[0] < 2:
        raise DegenerateBackground("background needs at least 2 distinct rows")
    d = model.n_features
    rng = np.random.default_rng(seed)
    Z = B[rng.integers(0, B.shape[0], size=(n_samples, d)), np.arange(d)]
    f = model.predict_proba(Z)
    width = kernel_width * np.sqrt(d)
    dist2 = np.sum((Z - x) ** 2, axis=1)
    sw = np.exp(-dist2 / width**2)
    wsum = sw.sum()

    beta = np.zeros(d)
    intercept = float(f.mean())
    r2 = 0.0
    if wsum > 0 and np.isfinite(wsum):
        zbar = sw @ Z / wsum
        fbar = float(sw @ f / wsum)
        Zc = Z - zbar
        fc = f - fbar
        A = (Zc * sw[:, None]).T @ Zc + ridge * np.eye(d)
        beta = np.linalg.solve(A, (Zc * sw[:, None]).T @ fc)
        intercept = fbar - float(zbar @ beta)
        ss_tot = float(sw @ fc**2)
        if ss_tot > 0:
            ss_res = float(sw @ (fc - Zc @ beta) ** 2)
            r2 = max(0.0, 1.0 - ss_res / ss_tot)
    cols = _names(model, names)
    kk = min(k, d)
    order = np.argsort(-np.abs(beta), kind="stable")[:kk]
    return LocalExplanation(
        editor=editor,
        top_features=tuple((cols[i], float(beta[i])) for i in order),
        surrogate_fit_r2=float(r2),
        weights=beta,
        intercept=intercept,
    )


def explain_instances(
    model: TrainedModel,
    X: np.ndarray,
    editors: Sequence[str],
    background: np.ndarray,
    n_samples: int = DEFAULT_SAMPLES,
    kernel_width: float = DEFAULT_KERNEL_WIDTH,
    k: int = DEFAULT_TOP_K,
    ridge: float = DEFAULT_RIDGE,
    seed: int = 0,
    names: Sequence[str] | None = None,
) -> list[LocalExplanation]:
    """One surrogate per row; row ``i`` uses the generator seeded by ``(seed, i)``."""
    return [
        local_surrogate(
            model, X[i], background, n_samples, kernel_width, k, ridge,
            seed=int(np.random.SeedSequence([seed, i]).generate_state(1)[0]),
            names=names, editor=editors[i],
        )
        for i in range(len(editors))
    ]


def surrogate_importance(explanations: Sequence[LocalExplanation], names: Sequence[str]) -> ImportanceRanking:
    """Global ranking: mean absolute surrogate weight across explained instances."""
    if not explanations:
        raise ValueError("no local explanations to aggregate")
    mean_abs = np.mean([np.abs(e.weights) for e in explanations], axis=0)
    return ImportanceRanking.from_scores(Method.LOCAL_SURROGATE, names, mean_abs)


def top_k_frequency(explanations: Sequence[LocalExplanation]) -> list[tuple[str, int]]:
    """How often each feature appears in a per-instance top-k list, most frequent first."""
    counts: dict[str, int] = {}
    for e in explanations:
        for name, _ in e.top_features:
            counts[name] = counts.get(name, 0) + 1
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))


def _power_iteration(C: np.ndarray, start: np.ndarray, tol: float, max_iter: int) -> tuple[np.ndarray, float]:
    v = start / np.linalg.norm(start)
    for _ in range(max_iter):
        w = C @ v
        norm = np.linalg.norm(w)
        if norm == 0:
            return v, 0.0
        w /= norm
        if np.linalg.norm(w - v) < tol or np.linalg.norm(w + v) < tol:
            v = w
            break
        v = w
    return v, float(v @ C @ v)


def _fix_sign(v: np.ndarray) -> np.ndarray:
    i = int(np.argmax(np.abs(v)))
    return -v if v[i] < 0 else v


def principal_axes(X: np.ndarray, tol: float = 1e-9, max_iter: int = 20000) -> tuple[np.ndarray, np.ndarray]:
    """Top-2 principal directions (rows) and their variances, by deflated power iteration."""
    X = np.asarray(X, dtype=float)
    Xc = X - X.mean(axis=0)
    C = Xc.T @ Xc / X.shape[0]
    scale = float(np.abs(C).max())
    if scale == 0.0:
        raise RankDeficient("all vectors are identical")
    axes, variances = [], []
    for _ in range(2):
        # deterministic start: the column of largest norm
        col = int(np.argmax(np.linalg.norm(C, axis=0)))
        start = C[:, col].copy()
        if np.linalg.norm(start) <= 1e-12 * scale:
            axes.append(np.zeros(C.shape[0]))
            variances.append(0.0)
            continue
        v, lam = _power_iteration(C, start, tol, max_iter)
        v = _fix_sign(v)
        axes.append(v)
        variances.append(lam)
        C = C - lam * np.outer(v, v)
    return np.vstack(axes), np.asarray(variances)


def project_2d(vectors: np.ndarray, labels: Sequence[Any]) -> list[tuple[float, float, Any]]:
    X = np.asarray(vectors, dtype=float)
    if X.ndim != 2 or X.shape[0] < 3:
        raise ValueError("need at least 3 vectors")
    if len(labels) != X.shape[0]:
        raise ValueError("one label per vector required")
    axes, _ = principal_axes(X)
    P = (X - X.mean(axis=0)) @ axes.T
    return [(float(a), float(b), lab) for (a, b), lab in zip(P, labels)]


def write_ranking_csv(path: str | Path, rankings: Sequence[ImportanceRanking], preamble: str | None = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if preamble:
            fh.write(preamble)
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", "rank", "feature", "score"])
        for r in rankings:
            for i, (name, score) in enumerate(r.entries, 1):
                w.writerow([r.method.value, i, name, repr(score)])


def write_projection_csv(
    path: str | Path, editors: Sequence[str], points: Sequence[tuple[float, float, Any]], preamble: str | None = None
) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if preamble:
            fh.write(preamble)
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["editor", "pc1", "pc2", "label"])
        for e, (a, b, lab) in zip(editors, points):
            w.writerow([e, repr(a), repr(b), lab])


def write_local_ndjson(path: str | Path, explanations: Sequence[LocalExplanation], header: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if header is not None:
            fh.write(json.dumps({"_meta": header}, sort_keys=True, separators=(",", ":")) + "\n")
        for e in explanations:
            fh.write(json.dumps(e.to_dict(), sort_keys=True, separators=(",", ":")) + "\n")
