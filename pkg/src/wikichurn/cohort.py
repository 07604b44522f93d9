"""Missing/active cohort construction.

The missing cohort is the listed editors with no edits in the cutoff year.
Active candidates are harvested from the co-editors of each missing editor's
most-edited pages, then matched on average edits per day: a candidate is kept
when its rate lies within one (population) standard deviation of the missing
editors' mean rate. A Mann-Whitney U test on the two rate samples records how
comparable the matched groups are.
"""

from __future__ import annotations

import enum
import json
import logging
import math
import warnings
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Sequence, TypeVar

from .errors import EmptyResult, HarvestEmpty, SourceError
from .ingest.fixture import dumps
from .ingest.source import DataSource
from .ingest.types import EditEvent, MissingEntry
from .stats import describe, mann_whitney_u

log = logging.getLogger(__name__)

SCHEMA_VERSION = "1"
HARVEST_NAMESPACES = (0, 4, 1)  # Main, Wikipedia, Talk
RATE_DEFINITION = "lifetime edits / max(1, days between first and last edit)"
SIGMA_DEFINITION = "population"
COMPARABILITY_ALPHA = 0.05

T = TypeVar("T")
R = TypeVar("R")


class Label(str, enum.Enum):
    MISSING = "missing"
    ACTIVE = "active"
    UNLABELED = "unlabeled"


class DegenerateSigma(UserWarning):
    """All missing editors share one rate, so only exact-rate candidates match."""


class PoorComparability(UserWarning):
    """Matched groups still differ significantly in activity rate."""


@dataclass
class EditorRecord:
    id: str
    label: Label
    avg_edits_per_day: float
    latest_edits: list[EditEvent] = field(default_factory=list)
    profile_text: str = ""
    admin_score: float = 0.0
    revert_counts: list[int] = field(default_factory=list)

    @property
    def revert_rate(self) -> float:
        return sum(self.revert_counts) / max(1, len(self.revert_counts))

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "label": self.label.value,
            "avg_edits_per_day": self.avg_edits_per_day,
            "latest_edits": [ev.to_dict() for ev in self.latest_edits],
            "profile_text": self.profile_text,
            "admin_score": self.admin_score,
            "revert_counts": list(self.revert_counts),
            "revert_rate": self.revert_rate,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> EditorRecord:
        return cls(
            id=d["id"],
            label=Label(d["label"]),
            avg_edits_per_day=float(d["avg_edits_per_day"]),
            latest_edits=[EditEvent.from_dict(e) for e in d.get("latest_edits", [])],
            profile_text=d.get("profile_text", ""),
            admin_score=float(d.get("admin_score", 0.0)),
            revert_counts=[int(n) for n in d.get("revert_counts", [])],
        )


@dataclass
class Cohort:
    missing: list[EditorRecord]
    active: list[EditorRecord]
    matching_mean: float
    matching_sigma: float
    mwu_p: float = math.nan
    created_at: int = 0
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        overlap = {r.id for r in self.missing} & {r.id for r in self.active}
        if overlap:
            raise ValueError(f"editors in both cohorts: {sorted(overlap)[:5]}")

    @property
    def records(self) -> list[EditorRecord]:
        return [*self.missing, *self.active]

    def check_matching(self) -> bool:
        m, s = self.matching_mean, self.matching_sigma
        return all(abs(r.avg_edits_per_day - m) <= s for r in self.active)

    def meta(self) -> dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "matching_mean": self.matching_mean,
            "matching_sigma": self.matching_sigma,
            "mwu_p": self.mwu_p,
            "created_at": self.created_at,
            "n_missing": len(self.missing),
            "n_active": len(self.active),
            "rate_definition": RATE_DEFINITION,
            "sigma_definition": SIGMA_DEFINITION,
            "params": self.params,
        }


@dataclass
class HarvestResult:
    candidates: set[str]
    pages_scanned: int
    skipped: list[tuple[str, str]] = field(default_factory=list)


def parallel_map(fn: Callable[[T], R], items: Sequence[T], workers: int = 1) -> list[R]:
    """Order-preserving map; results never depend on completion order."""
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def build_missing_cohort(
    source: DataSource,
    missing_list: Iterable[MissingEntry],
    cutoff_year: int = 2020,
    workers: int = 1,
) -> list[EditorRecord]:
    """Listed editors with zero edits in ``cutoff_year``, labeled missing."""
    if not 1 <= int(cutoff_year) <= 9999:
        raise ValueError(f"invalid cutoff year {cutoff_year}")
    names = sorted({entry.editor for entry in missing_list})

    def probe(name: str) -> EditorRecord | None:
        try:
            if source.edited_in_year(name, cutoff_year):
                return None
            summary = source.fetch_editor_summary(name)
        except SourceError as exc:
            log.warning("skipping listed editor %r: %s", name, exc)
            return None
        return EditorRecord(id=name, label=Label.MISSING, avg_edits_per_day=summary.avg_edits_per_day)

    kept = [r for r in parallel_map(probe, names, workers) if r is not None]
    if not kept:
        raise EmptyResult(f"no listed editor is free of edits in {cutoff_year}")
    return kept


def top_coeditors(
    source: DataSource,
    editor: str,
    pages_per_ns: int = 20,
    revisions: int = 100,
    top_k: int = 10,
    namespaces: Sequence[int] = HARVEST_NAMESPACES,
) -> tuple[list[str], int]:
    """The ``top_k`` contributors to the latest revisions of ``editor``'s top pages.

    Returns the selected names and the number of pages scanned. The editor's
    own revisions are not counted; ties rank by username.
    """
    counts: Counter[str] = Counter()
    scanned = 0
    for ns in namespaces:
        for page, _ in source.fetch_top_pages(editor, ns, pages_per_ns):
            scanned += 1
            for contributor, _ts in source.fetch_page_revisions(page, revisions):
                if contributor != editor:
                    counts[contributor] += 1
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return [name for name, _ in ranked[:top_k]], scanned


def harvest_active_candidates(
    source: DataSource,
    missing: Sequence[EditorRecord],
    pages_per_ns: int = 20,
    revisions: int = 100,
    top_k: int = 10,
    exclude: Iterable[str] = (),
    workers: int = 1,
) -> HarvestResult:
    """Union of every missing editor's top co-editors, minus listed editors."""
    if not missing:
        raise ValueError("harvest needs at least one missing editor")

    def one(rec: EditorRecord) -> tuple[str, list[str], int, str | None]:
        try:
            names, scanned = top_coeditors(source, rec.id, pages_per_ns, revisions, top_k)
        except SourceError as exc:
            log.warning("harvest skipped %r: %s", rec.id, exc)
            return rec.id, [], 0, str(exc)
        return rec.id, names, scanned, None

    union: set[str] = set()
    pages = 0
    skipped = []
    for name, names, scanned, err in parallel_map(one, list(missing), workers):
        if err is not None:
            skipped.append((name, err))
            continue
        union.update(names)
        pages += scanned
    union -= set(exclude) | {r.id for r in missing}
    if not union:
        raise HarvestEmpty("no active candidates found")
    return HarvestResult(candidates=union, pages_scanned=pages, skipped=skipped)


def candidate_rates(source: DataSource, candidates: Iterable[str], workers: int = 1) -> dict[str, float]:
    names = sorted(candidates)

    def rate(name: str) -> float | None:
        try:
            return source.fetch_editor_summary(name).avg_edits_per_day
        except SourceError as exc:
            log.warning("no activity rate for candidate %r: %s", name, exc)
            return None

    return {n: r for n, r in zip(names, parallel_map(rate, names, workers)) if r is not None}


def match_active_cohort(
    candidate_rates: Mapping[str, float],
    missing: Sequence[EditorRecord],
    sigma_scale: float = 1.0,
    created_at: int = 0,
) -> Cohort:
    """Keep candidates whose rate is within one sigma of the missing mean rate.

    ``sigma_scale`` shrinks or widens the window; it exists for tests.
    """
    stats = describe([r.avg_edits_per_day for r in missing])
    m, sigma = stats.mean, stats.std * sigma_scale
    if sigma == 0.0:
        msg = "missing editors share one activity rate; only exact-rate candidates match"
        log.warning(msg)
        warnings.warn(msg, DegenerateSigma, stacklevel=2)
    missing_ids = {r.id for r in missing}
    active = [
        EditorRecord(id=name, label=Label.ACTIVE, avg_edits_per_day=rate)
        for name, rate in sorted(candidate_rates.items())
        if name not in missing_ids and abs(rate - m) <= sigma
    ]
    cohort = Cohort(
        missing=sorted(missing, key=lambda r: r.id),
        active=active,
        matching_mean=m,
        matching_sigma=sigma,
        created_at=created_at,
    )
    if active:
        validate_comparability(cohort)
    return cohort


def validate_comparability(cohort: Cohort) -> float:
    """Two-sided Mann-Whitney p-value between the groups' activity rates."""
    if not cohort.missing or not cohort.active:
        raise ValueError("comparability needs both groups non-empty")
    p = mann_whitney_u(
        [r.avg_edits_per_day for r in cohort.missing],
        [r.avg_edits_per_day for r in cohort.active],
    ).p_value
    cohort.mwu_p = p
    if p < COMPARABILITY_ALPHA:
        msg = f"matched cohorts differ in activity rate (Mann-Whitney p={p:.4g})"
        log.warning(msg)
        warnings.warn(msg, PoorComparability, stacklevel=2)
    return p


def enrich_records(
    source: DataSource,
    records: Sequence[EditorRecord],
    window: int = 50,
    revert_pages: int = 50,
    workers: int = 1,
) -> tuple[list[EditorRecord], list[tuple[str, str]]]:
    """Attach latest edits, admin score, profile text and revert counts.

    Editors whose data cannot be fetched are dropped and reported.
    """

    def one(rec: EditorRecord) -> tuple[EditorRecord | None, str | None]:
        try:
            edits = source.fetch_latest_edits(rec.id, window)
            admin = source.fetch_admin_score(rec.id).score
            text = source.fetch_user_page_text(rec.id)
            reverts = [n for _, n in source.fetch_revert_counts(rec.id, revert_pages)]
        except SourceError as exc:
            log.warning("dropping %r: %s", rec.id, exc)
            return None, str(exc)
        return EditorRecord(
            id=rec.id,
            label=rec.label,
            avg_edits_per_day=rec.avg_edits_per_day,
            latest_edits=edits,
            profile_text=text,
            admin_score=admin,
            revert_counts=reverts,
        ), None

    kept: list[EditorRecord] = []
    dropped: list[tuple[str, str]] = []
    for rec, (new, err) in zip(records, parallel_map(one, list(records), workers)):
        if new is None:
            dropped.append((rec.id, err or "unknown"))
        else:
            kept.append(new)
    return kept, dropped


@dataclass
class CurationReport:
    listed: int
    filtered: int
    pages: int
    candidates: int
    matched: int
    matching_mean: float
    matching_sigma: float
    mwu_p: float
    skipped_harvest: list[str] = field(default_factory=list)
    dropped: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return dict(self.__dict__)


def curate(
    source: DataSource,
    cutoff_year: int = 2020,
    window: int = 50,
    pages_per_ns: int = 20,
    revisions: int = 100,
    top_k: int = 10,
    workers: int = 1,
    created_at: int = 0,
    enrich: bool = True,
    sigma_scale: float = 1.0,
) -> tuple[Cohort, CurationReport]:
    """Run every cohort-construction stage against ``source``."""
    listed = source.missing_list()
    listed_names = {e.editor for e in listed}
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        missing = build_missing_cohort(source, listed, cutoff_year, workers)
        harvest = harvest_active_candidates(
            source, missing, pages_per_ns, revisions, top_k, exclude=listed_names, workers=workers
        )
        rates = candidate_rates(source, harvest.candidates, workers)
        cohort = match_active_cohort(rates, missing, sigma_scale=sigma_scale, created_at=created_at)
    matched = len(cohort.active)
    dropped: list[tuple[str, str]] = []
    if enrich:
        kept_missing, d1 = enrich_records(source, cohort.missing, window, workers=workers)
        kept_active, d2 = enrich_records(source, cohort.active, window, workers=workers)
        dropped = d1 + d2
        cohort.missing, cohort.active = kept_missing, kept_active
    cohort.params = {
        "cutoff_year": cutoff_year,
        "window": window,
        "pages_per_ns": pages_per_ns,
        "revisions": revisions,
        "top_k": top_k,
        "namespaces": list(HARVEST_NAMESPACES),
        "sigma_scale": sigma_scale,
    }
    report = CurationReport(
        listed=len(listed_names),
        filtered=len(missing),
        pages=harvest.pages_scanned,
        candidates=len(harvest.candidates),
        matched=matched,
        matching_mean=cohort.matching_mean,
        matching_sigma=cohort.matching_sigma,
        mwu_p=cohort.mwu_p,
        skipped_harvest=[name for name, _ in harvest.skipped],
        dropped=[name for name, _ in dropped],
        warnings=[str(w.message) for w in caught if issubclass(w.category, (DegenerateSigma, PoorComparability))],
    )
    return cohort, report


def pool_records(source: DataSource, names: Iterable[str], window: int = 50, workers: int = 1) -> list[EditorRecord]:
    """Unlabeled, enriched records for the editors to monitor."""
    base = []
    for name in sorted(set(names)):
        try:
            rate = source.fetch_editor_summary(name).avg_edits_per_day
        except SourceError as exc:
            log.warning("pool editor %r skipped: %s", name, exc)
            continue
        base.append(EditorRecord(id=name, label=Label.UNLABELED, avg_edits_per_day=rate))
    kept, _ = enrich_records(source, base, window, workers=workers)
    return kept


def write_records(path: str | Path, records: Iterable[EditorRecord], header: Mapping[str, Any] | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if header is not None:
            fh.write(dumps({"_meta": dict(header)}) + "\n")
        for rec in records:
            fh.write(dumps(rec.to_dict()) + "\n")


def read_records(path: str | Path) -> list[EditorRecord]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            if "_meta" in rec:
                continue
            out.append(EditorRecord.from_dict(rec))
    return out


def write_cohort(cohort: Cohort, directory: str | Path, header: Mapping[str, Any] | None = None) -> None:
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    ordered = sorted(cohort.missing, key=lambda r: r.id) + sorted(cohort.active, key=lambda r: r.id)
    write_records(root / "cohort.ndjson", ordered, header)
    meta = cohort.meta()
    if header:
        meta = {**meta, "_meta": dict(header)}
    (root / "cohort.meta").write_text(dumps(meta) + "\n", encoding="utf-8")


def read_cohort(directory: str | Path) -> Cohort:
    root = Path(directory)
    meta = json.loads((root / "cohort.meta").read_text(encoding="utf-8"))
    records = read_records(root / "cohort.ndjson")
    return Cohort(
        missing=[r for r in records if r.label is Label.MISSING],
        active=[r for r in records if r.label is Label.ACTIVE],
        matching_mean=meta["matching_mean"],
        matching_sigma=meta["matching_sigma"],
        mwu_p=meta["mwu_p"],
        created_at=meta["created_at"],
        params=meta.get("params", {}),
    )
