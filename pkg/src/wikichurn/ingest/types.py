from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import date
from typing import Any

STUDIED_NAMESPACES = (0, 1, 4, 5)
NAMESPACE_PREFIX = {0: "", 1: "Talk:", 4: "Wikipedia:", 5: "Wikipedia talk:"}


def check_editor_id(username: str) -> str:
    if not isinstance(username, str) or not username or username != username.strip():
        raise ValueError(f"invalid editor id: {username!r}")
    return username


@dataclass(frozen=True, order=True)
class PageRef:
    title: str
    namespace: int

    def __post_init__(self) -> None:
        if not self.title:
            raise ValueError("page title must be non-empty")
        if self.namespace not in STUDIED_NAMESPACES:
            raise ValueError(f"namespace {self.namespace} outside {STUDIED_NAMESPACES}")

    @property
    def full_title(self) -> str:
        return NAMESPACE_PREFIX[self.namespace] + self.title

    def to_dict(self) -> dict[str, Any]:
        return {"title": self.title, "namespace": self.namespace}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> PageRef:
        return cls(title=d["title"], namespace=int(d["namespace"]))


def _check_prob(name: str, value: float | None) -> None:
    if value is not None and not (0.0 <= value <= 1.0):
        raise ValueError(f"{name} must lie in [0, 1], got {value}")


@dataclass(frozen=True)
class EditEvent:
    editor: str
    page: PageRef
    timestamp: int
    byte_delta: int
    minor: bool
    ores_damaging_prob: float | None = None
    ores_goodfaith_prob: float | None = None
    reverted: bool = False
    automated: bool = False

    def __post_init__(self) -> None:
        check_editor_id(self.editor)
        if self.timestamp <= 0:
            raise ValueError(f"timestamp must be positive, got {self.timestamp}")
        _check_prob("ores_damaging_prob", self.ores_damaging_prob)
        _check_prob("ores_goodfaith_prob", self.ores_goodfaith_prob)

    def to_dict(self) -> dict[str, Any]:
        return {
            "editor": self.editor,
            "page": self.page.to_dict(),
            "timestamp": self.timestamp,
            "byte_delta": self.byte_delta,
            "minor": self.minor,
            "ores_damaging_prob": self.ores_damaging_prob,
            "ores_goodfaith_prob": self.ores_goodfaith_prob,
            "reverted": self.reverted,
            "automated": self.automated,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> EditEvent:
        return cls(
            editor=d["editor"],
            page=PageRef.from_dict(d["page"]),
            timestamp=int(d["timestamp"]),
            byte_delta=int(d["byte_delta"]),
            minor=bool(d["minor"]),
            ores_damaging_prob=d.get("ores_damaging_prob"),
            ores_goodfaith_prob=d.get("ores_goodfaith_prob"),
            reverted=bool(d.get("reverted", False)),
            automated=bool(d.get("automated", False)),
        )


@dataclass(frozen=True)
class AdminScoreRecord:
    editor: str
    score: float
    fetched_at: int

    def __post_init__(self) -> None:
        if not math.isfinite(self.score):
            raise ValueError(f"admin score must be finite, got {self.score}")

    def to_dict(self) -> dict[str, Any]:
        return {"editor": self.editor, "score": self.score, "fetched_at": self.fetched_at}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> AdminScoreRecord:
        return cls(editor=d["editor"], score=float(d["score"]), fetched_at=int(d["fetched_at"]))


@dataclass(frozen=True)
class EditorSummary:
    """Lifetime counters needed for activity-rate matching and year filtering."""

    editor: str
    total_edits: int
    first_edit: int
    last_edit: int
    edits_by_year: dict[int, int] = field(default_factory=dict)

    @property
    def avg_edits_per_day(self) -> float:
        days = max(1.0, (self.last_edit - self.first_edit) / 86400.0)
        return self.total_edits / days

    def to_dict(self) -> dict[str, Any]:
        return {
            "editor": self.editor,
            "total_edits": self.total_edits,
            "first_edit": self.first_edit,
            "last_edit": self.last_edit,
            "edits_by_year": {str(y): c for y, c in sorted(self.edits_by_year.items())},
        }


@dataclass(frozen=True)
class MissingEntry:
    editor: str
    last_edit_date: date

    def to_dict(self) -> dict[str, Any]:
        return {"editor": self.editor, "last_edit_date": self.last_edit_date.isoformat()}
