"""Feature-group ablation grid, end-to-end fitting and risk scoring."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import GroupUnavailable, LayoutMismatch
from ..features.matrix import FeatureVector, Normalization, assemble_matrix, common_words_for, parse_groups
from .ensemble import KIND_NAMES, KINDS, Hyperparams, TrainedModel, train
from .evaluation import EvalReport, SplitSpec, evaluate, split

log = logging.getLogger(__name__)

DEFAULT_COMBOS: tuple[tuple[str, ...], ...] = (
    ("G1",),
    ("G2",),
    ("G3",),
    ("G1", "G2"),
    ("G1", "G3"),
    ("G1", "G4"),
    ("G1", "G5"),
    ("G1", "G2", "G4"),
    ("G1", "G3", "G4"),
    ("G1", "G4", "G5"),
    ("G1", "G3", "G5"),
    ("G1", "G2", "G4", "G5"),
    ("G1", "G3", "G4", "G5"),
)
DEFAULT_MIN_CONFIDENCE = 0.8


def combo_label(groups: Sequence[str]) -> str:
    return "+".join(groups)


def labeled(vectors: Sequence[FeatureVector]) -> list[FeatureVector]:
    return [v for v in vectors if v.label_code >= 0]


@dataclass
class PreparedSplit:
    X_train: np.ndarray
    y_train: np.ndarray
    X_test: np.ndarray
    y_test: np.ndarray
    normalization: Normalization
    names: list[str]
    common_words: frozenset[str]
    test_editors: list[str]


def prepare_split(
    vectors: Sequence[FeatureVector], groups: Sequence[str], spec: SplitSpec
) -> PreparedSplit:
    """Split labeled vectors, then fit common words and scaling on the train part only."""
    groups = parse_groups(groups)
    vecs = labeled(vectors)
    y_all = np.asarray([v.label_code for v in vecs], dtype=int)
    tr, te = split(y_all, spec)
    train_v = [vecs[i] for i in tr]
    test_v = [vecs[i] for i in te]
    common = common_words_for(train_v) if "G2" in groups else frozenset()
    Xtr, ytr, norm, names = assemble_matrix(train_v, groups, None, common)
    Xte, yte, _, _ = assemble_matrix(test_v, groups, norm, common)
    return PreparedSplit(Xtr, ytr, Xte, yte, norm, names, common, [v.editor for v in test_v])


def fit_model(
    vectors: Sequence[FeatureVector],
    groups: Sequence[str],
    kind: str,
    spec: SplitSpec,
    hyperparams: Hyperparams | None = None,
    workers: int = 1,
) -> tuple[TrainedModel, EvalReport]:
    """Split, fit and evaluate; the returned model carries everything needed to score."""
    groups = parse_groups(groups)
    prep = prepare_split(vectors, groups, spec)
    model = train(kind, prep.X_train, prep.y_train, hyperparams, spec.seed, workers)
    report = evaluate(model, prep.X_test, prep.y_test)
    model.groups = groups
    model.feature_names = prep.names
    model.normalization = prep.normalization.to_dict()
    model.common_words = sorted(prep.common_words)
    model.metrics = report.to_dict()
    return model, report


def model_matrix(model: TrainedModel, vectors: Sequence[FeatureVector]) -> np.ndarray:
    """Feature matrix of ``vectors`` laid out and scaled as ``model`` expects."""
    if model.normalization is None:
        raise LayoutMismatch("model carries no normalization parameters")
    if not vectors:
        return np.zeros((0, model.n_features))
    norm = Normalization.from_dict(model.normalization)
    X, _, _, names = assemble_matrix(vectors, model.groups, norm, frozenset(model.common_words))
    if model.feature_names and names != model.feature_names:
        raise LayoutMismatch("feature columns differ from those the model was trained on")
    return X


@dataclass
class AblationRow:
    groups: tuple[str, ...]
    kind: str | None
    report: EvalReport | None
    per_kind: dict[str, EvalReport] = field(default_factory=dict)
    skipped: str | None = None

    @property
    def features(self) -> str:
        return combo_label(self.groups)


def _best(per_kind: dict[str, EvalReport], kinds: Sequence[str]) -> str:
    order = {k: i for i, k in enumerate(KINDS)}
    return min(
        kinds,
        key=lambda k: (-per_kind[k].accuracy, -per_kind[k].weighted_f1, order[k]),
    )


def run_ablation(
    vectors: Sequence[FeatureVector],
    combos: Sequence[Sequence[str]] = DEFAULT_COMBOS,
    kinds: Sequence[str] = KINDS,
    spec: SplitSpec | None = None,
    hyperparams: Hyperparams | None = None,
    workers: int = 1,
) -> list[AblationRow]:
    """Train every kind on every combo over one shared split; keep the best per combo."""
    spec = spec or SplitSpec()
    rows = []
    for combo in combos:
        groups = parse_groups(combo)
        try:
            prep = prepare_split(vectors, groups, spec)
        except GroupUnavailable as exc:
            log.warning("ablation row %s skipped: %s", combo_label(groups), exc)
            rows.append(AblationRow(groups, None, None, skipped=str(exc)))
            continue
        per_kind = {}
        for kind in kinds:
            model = train(kind, prep.X_train, prep.y_train, hyperparams, spec.seed, workers)
            per_kind[kind] = evaluate(model, prep.X_test, prep.y_test)
        best = _best(per_kind, kinds)
        rows.append(AblationRow(groups, best, per_kind[best], per_kind))
    return rows


def write_ablation_csv(path: str | Path, rows: Sequence[AblationRow], preamble: str | None = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if preamble:
            fh.write(preamble)
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["features", "classifier", "precision", "recall", "f-score", "accuracy"])
        for r in rows:
            if r.report is None:
                w.writerow([r.features, "skipped", "", "", "", ""])
                continue
            rep = r.report
            w.writerow([
                r.features, KIND_NAMES[r.kind],
                f"{rep.weighted_precision:.4f}", f"{rep.weighted_recall:.4f}",
                f"{rep.weighted_f1:.4f}", f"{rep.accuracy:.4f}",
            ])


@dataclass(frozen=True)
class RiskScore:
    editor: str
    probability: float


def score_editors(
    model: TrainedModel, X: np.ndarray, editors: Sequence[str]
) -> list[RiskScore]:
    """Probability of the missing class per editor, highest first (ties by name)."""
    if len(editors) == 0:
        return []
    X = np.asarray(X, dtype=float)
    if X.shape[0] != len(editors):
        raise ValueError("one matrix row per editor required")
    p = model.predict_proba(X)
    out = [RiskScore(e, float(v)) for e, v in zip(editors, p)]
    out.sort(key=lambda s: (-s.probability, s.editor))
    return out


def flag(scores: Sequence[RiskScore], min_confidence: float = DEFAULT_MIN_CONFIDENCE) -> list[RiskScore]:
    """Editors whose risk probability strictly exceeds ``min_confidence``."""
    return [s for s in scores if s.probability > min_confidence]
