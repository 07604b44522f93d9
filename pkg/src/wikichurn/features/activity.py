"""Activity (F1-F14) and quality (F15-F16) features of one editor."""

from __future__ import annotations

import logging
from dataclasses import astuple, dataclass, fields
from typing import Sequence

from ..errors import EmptyWindow
from ..ingest.types import EditEvent

log = logging.getLogger(__name__)

MONTH_DAYS = 30.44
DAMAGING_THRESHOLD = 0.5


@dataclass(frozen=True)
class ActivityFeatures:
    f1_ns0: int
    f2_ns1: int
    f3_ns4: int
    f4_ns5: int
    f5_major: int
    f6_minor: int
    f7_add_major: float
    f8_del_major: float
    f9_add_minor: float
    f10_del_minor: float
    f11_span_months: float
    f12_ores_mean: float
    f13_goodfaith_count: int
    f14_damaging_count: int

    @classmethod
    def names(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def as_list(self) -> list[float]:
        return [float(v) for v in astuple(self)]


def _mean(values: list[int]) -> float:
    return sum(values) / len(values) if values else 0.0


def activity_features(edits: Sequence[EditEvent]) -> ActivityFeatures:
    if not edits:
        raise EmptyWindow("no edits in the activity window")
    window = sorted(edits, key=lambda ev: -ev.timestamp)
    ns = [ev.page.namespace for ev in window]
    major = [ev for ev in window if not ev.minor]
    minor = [ev for ev in window if ev.minor]
    goodfaith = [ev.ores_goodfaith_prob for ev in window if ev.ores_goodfaith_prob is not None]
    damaging = [ev.ores_damaging_prob for ev in window if ev.ores_damaging_prob is not None]
    span = window[0].timestamp - window[-1].timestamp
    return ActivityFeatures(
        f1_ns0=ns.count(0),
        f2_ns1=ns.count(1),
        f3_ns4=ns.count(4),
        f4_ns5=ns.count(5),
        f5_major=len(major),
        f6_minor=len(minor),
        f7_add_major=_mean([ev.byte_delta for ev in major if ev.byte_delta > 0]),
        f8_del_major=_mean([-ev.byte_delta for ev in major if ev.byte_delta < 0]),
        f9_add_minor=_mean([ev.byte_delta for ev in minor if ev.byte_delta > 0]),
        f10_del_minor=_mean([-ev.byte_delta for ev in minor if ev.byte_delta < 0]),
        f11_span_months=span / (MONTH_DAYS * 86400.0),
        f12_ores_mean=sum(goodfaith) / len(goodfaith) if goodfaith else 0.0,
        f13_goodfaith_count=sum(1 for p in damaging if p < DAMAGING_THRESHOLD),
        f14_damaging_count=sum(1 for p in damaging if p >= DAMAGING_THRESHOLD),
    )


@dataclass(frozen=True)
class QualityFeatures:
    f15_revert_rate: float
    f16_admin_score: float


def revert_rate(revert_counts: Sequence[int], editor: str = "") -> float:
    """Mean reverted edits per top main-namespace page; 0 when there are none."""
    if not revert_counts:
        log.warning("editor %r has no main-namespace pages; revert rate set to 0", editor)
        return 0.0
    return sum(revert_counts) / len(revert_counts)


def quality_features(record) -> QualityFeatures:
    """``record`` is an :class:`~wikichurn.cohort.EditorRecord`."""
    return QualityFeatures(
        f15_revert_rate=revert_rate(record.revert_counts, record.id),
        f16_admin_score=float(record.admin_score),
    )
