"""Per-editor feature vectors and ablation-ready design matrices.

Column blocks always appear in the order G1, G2, G3, G4, G5:

* G1: the 14 activity features
* G2: part-of-speech frequencies (one per tag) followed by the 21 lexical categories
* G3: the 512-d sentence vector
* G4: admin score
* G5: revert rate
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from ..errors import GroupUnavailable
from ..ingest.fixture import dumps
from .activity import ActivityFeatures, activity_features, quality_features
from .empath import LexiconPack, empath_features
from .encoder import DIM, Encoder, sentence_vector
from .text import TAGSET, Tagger, clean_profile_text, common_vocabulary, pos_frequencies, tagged_tokens

GROUPS = ("G1", "G2", "G3", "G4", "G5")
NON_LINGUISTIC = ("G1", "G4", "G5")
LABEL_CODES = {"missing": 1, "active": 0, "unlabeled": -1}


def parse_groups(spec: str | Iterable[str]) -> tuple[str, ...]:
    """``"g1,g4"`` or ``["G1", "G4"]`` -> ``("G1", "G4")`` in canonical order."""
    items = spec.split(",") if isinstance(spec, str) else list(spec)
    wanted = {s.strip().upper() for s in items if s.strip()}
    unknown = wanted - set(GROUPS)
    if unknown or not wanted:
        raise ValueError(f"bad feature groups {sorted(wanted)}; choose from {GROUPS}")
    return tuple(g for g in GROUPS if g in wanted)


def group_columns(group: str, lexicon_categories: Sequence[str]) -> list[str]:
    if group == "G1":
        return [f"g1.{n}" for n in ActivityFeatures.names()]
    if group == "G2":
        return [f"g2.pos_{t}" for t in TAGSET] + [f"g2.empath_{c}" for c in lexicon_categories]
    if group == "G3":
        return [f"g3.sv_{i:03d}" for i in range(DIM)]
    if group == "G4":
        return ["g4.admin_score"]
    if group == "G5":
        return ["g5.revert_rate"]
    raise ValueError(group)


@dataclass
class FeatureVector:
    editor: str
    label: str
    g1: ActivityFeatures
    pos_tokens: list[tuple[str, str]]
    empath: np.ndarray
    sentence_vec: np.ndarray | None
    admin_score: float
    revert_rate: float
    lexicon_categories: tuple[str, ...] = field(default=(), repr=False)

    @property
    def label_code(self) -> int:
        return LABEL_CODES[self.label]

    def tokens(self) -> set[str]:
        return {tok for tok, _ in self.pos_tokens}

    def block(self, group: str, common_words: frozenset[str] = frozenset()) -> list[float]:
        if group == "G1":
            return self.g1.as_list()
        if group == "G2":
            freqs = pos_frequencies(self.pos_tokens, common_words)
            return [freqs[t] for t in TAGSET] + [float(v) for v in self.empath]
        if group == "G3":
            if self.sentence_vec is None:
                raise GroupUnavailable("G3 requested but no sentence encoder was configured")
            return [float(v) for v in self.sentence_vec]
        if group == "G4":
            return [float(self.admin_score)]
        if group == "G5":
            return [float(self.revert_rate)]
        raise ValueError(group)

    def to_dict(self) -> dict[str, Any]:
        return {
            "editor": self.editor,
            "label": self.label,
            "g1": dict(zip(ActivityFeatures.names(), self.g1.as_list())),
            "pos_tokens": [list(p) for p in self.pos_tokens],
            "empath": dict(zip(self.lexicon_categories, map(float, self.empath))),
            "sentence_vec": None if self.sentence_vec is None else [float(v) for v in self.sentence_vec],
            "admin_score": self.admin_score,
            "revert_rate": self.revert_rate,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> FeatureVector:
        g1 = d["g1"]
        names = ActivityFeatures.names()
        values = {
            n: (int(g1[n]) if ActivityFeatures.__dataclass_fields__[n].type == "int" else float(g1[n]))
            for n in names
        }
        emp = d["empath"]
        return cls(
            editor=d["editor"],
            label=d["label"],
            g1=ActivityFeatures(**values),
            pos_tokens=[(t, g) for t, g in d["pos_tokens"]],
            empath=np.asarray(list(emp.values()), dtype=float),
            sentence_vec=None if d["sentence_vec"] is None else np.asarray(d["sentence_vec"], dtype=float),
            admin_score=float(d["admin_score"]),
            revert_rate=float(d["revert_rate"]),
            lexicon_categories=tuple(emp.keys()),
        )


def featurize_record(
    record,
    tagger: Tagger,
    lexicons: LexiconPack,
    encoder: Encoder | None,
    use_dictionary: bool = True,
) -> FeatureVector:
    """Compute every feature group for one :class:`~wikichurn.cohort.EditorRecord`."""
    sentences = clean_profile_text(record.profile_text)
    quality = quality_features(record)
    return FeatureVector(
        editor=record.id,
        label=record.label.value,
        g1=activity_features(record.latest_edits),
        pos_tokens=tagged_tokens(sentences, tagger, use_dictionary),
        empath=empath_features(sentences, lexicons),
        sentence_vec=None if encoder is None else sentence_vector(sentences, encoder, record.id),
        admin_score=quality.f16_admin_score,
        revert_rate=quality.f15_revert_rate,
        lexicon_categories=lexicons.categories,
    )


def common_words_for(vectors: Sequence[FeatureVector]) -> frozenset[str]:
    """Vocabulary shared by the missing and active members of ``vectors``."""
    return common_vocabulary(
        (v.tokens() for v in vectors if v.label == "missing"),
        (v.tokens() for v in vectors if v.label == "active"),
    )


def column_names(groups: Sequence[str], lexicon_categories: Sequence[str]) -> list[str]:
    names: list[str] = []
    for g in parse_groups(groups):
        names.extend(group_columns(g, lexicon_categories))
    return names


def design_matrix(
    vectors: Sequence[FeatureVector],
    groups: Sequence[str],
    common_words: frozenset[str] = frozenset(),
) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Raw (unnormalised) matrix, label codes and column names."""
    groups = parse_groups(groups)
    cats = vectors[0].lexicon_categories if vectors else ()
    names = column_names(groups, cats)
    rows = []
    for v in vectors:
        row: list[float] = []
        for g in groups:
            row.extend(v.block(g, common_words))
        rows.append(row)
    X = np.asarray(rows, dtype=float).reshape(len(vectors), len(names))
    if not np.all(np.isfinite(X)):
        bad = sorted({names[j] for j in np.argwhere(~np.isfinite(X))[:, 1]})
        raise ValueError(f"non-finite feature values in columns {bad[:5]}")
    y = np.asarray([v.label_code for v in vectors], dtype=int)
    return X, y, names


@dataclass
class Normalization:
    """Per-column min-max scaling fitted on training rows; never clipped."""

    mins: np.ndarray
    maxs: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> Normalization:
        X = np.asarray(X, dtype=float)
        return cls(mins=X.min(axis=0), maxs=X.max(axis=0))

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[1] != self.mins.shape[0]:
            raise ValueError(f"expected {self.mins.shape[0]} columns, got {X.shape[1]}")
        span = self.maxs - self.mins
        out = np.zeros_like(X)
        varying = span > 0
        out[:, varying] = (X[:, varying] - self.mins[varying]) / span[varying]
        return out

    def to_dict(self) -> dict[str, list[float]]:
        return {"mins": [float(v) for v in self.mins], "maxs": [float(v) for v in self.maxs]}

    @classmethod
    def from_dict(cls, d: Mapping[str, Sequence[float]]) -> Normalization:
        return cls(mins=np.asarray(d["mins"], dtype=float), maxs=np.asarray(d["maxs"], dtype=float))


def assemble_matrix(
    vectors: Sequence[FeatureVector],
    groups: Sequence[str],
    normalization: Normalization | None = None,
    common_words: frozenset[str] = frozenset(),
) -> tuple[np.ndarray, np.ndarray, Normalization, list[str]]:
    """Normalised matrix for ``groups``; fits the normalisation when none is given."""
    X, y, names = design_matrix(vectors, groups, common_words)
    if normalization is None:
        normalization = Normalization.fit(X)
    return normalization.transform(X), y, normalization, names


def write_features(path: str | Path, vectors: Iterable[FeatureVector], header: Mapping[str, Any] | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if header is not None:
            fh.write(dumps({"_meta": dict(header)}) + "\n")
        for v in vectors:
            fh.write(dumps(v.to_dict()) + "\n")


def read_features(path: str | Path) -> list[FeatureVector]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            if "_meta" not in rec:
                out.append(FeatureVector.from_dict(rec))
    return out


def write_feature_csv(path: str | Path, vectors: Sequence[FeatureVector], preamble: str | None = None) -> None:
    """Full matrix (every available group, no common-word removal) with a header row."""
    groups = [g for g in GROUPS if g != "G3" or all(v.sentence_vec is not None for v in vectors)]
    X, _, names = design_matrix(vectors, groups)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if preamble:
            fh.write(preamble)
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["editor", *names, "label"])
        for v, row in zip(vectors, X):
            writer.writerow([v.editor, *(_fmt(x) for x in row), v.label])


def _fmt(x: float) -> str:
    if float(x).is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x)) if math.isfinite(x) else "NA"
