"""Fixture bundles: a directory of line-delimited JSON files plus a ``meta`` header.

Layout::

    meta                 {"schema_version": "1", "snapshot_at": <utc seconds>, "counts": {...}}
    editors.ndjson       one editor payload per line
    pages.ndjson         {"title", "namespace", "revisions": [{"editor", "timestamp"}, ...]}
    missing_list.ndjson  {"editor", "last_edit_date"}
    pool.ndjson          optional; {"editor"} per line, editors to monitor when scoring

Editor payload keys: ``id``, ``total_edits``, ``first_edit``, ``last_edit``,
``edits_by_year`` (year -> count), ``edits`` (EditEvent records, any order),
``top_pages`` (namespace -> {title: edit count}), ``reverts`` (main-namespace
title -> reverted edit count), ``admin_score``, ``user_page`` (string or null).
Contributors that only appear in page revisions need no payload.
"""

from __future__ import annotations

import json
import math
import shutil
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from ..errors import SchemaMismatch, SourceUnavailable, UnknownEditor, UnknownPage
from .missing_list import parse_missing_lines
from .source import DataSource, check_limit
from .types import AdminScoreRecord, EditEvent, EditorSummary, MissingEntry, PageRef

SCHEMA_VERSION = "1"
BUNDLE_FILES = ("meta", "editors.ndjson", "pages.ndjson", "missing_list.ndjson")


def dumps(obj: Any) -> str:
    """Canonical single-line JSON used for every persisted record."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def _read_ndjson(path: Path) -> list[dict[str, Any]]:
    if not path.exists():
        return []
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out


@dataclass
class FixtureBundle:
    editors: dict[str, dict[str, Any]] = field(default_factory=dict)
    pages: dict[PageRef, list[tuple[str, int]]] = field(default_factory=dict)
    missing_list: list[MissingEntry] = field(default_factory=list)
    pool: list[str] = field(default_factory=list)
    schema_version: str = SCHEMA_VERSION
    snapshot_at: int = 0

    def counts(self) -> dict[str, int]:
        return {
            "editors": len(self.editors),
            "pages": len(self.pages),
            "missing_list": len(self.missing_list),
            "pool": len(self.pool),
        }

    def validate(self) -> None:
        if self.schema_version != SCHEMA_VERSION:
            raise SchemaMismatch(
                f"fixture schema {self.schema_version!r} unsupported (expected {SCHEMA_VERSION!r})"
            )
        problems = []
        for entry in self.missing_list:
            if entry.editor not in self.editors:
                problems.append(f"missing-list editor {entry.editor!r} has no payload")
        for name in self.pool:
            if name not in self.editors:
                problems.append(f"pool editor {name!r} has no payload")
        for name, payload in self.editors.items():
            if payload.get("id") != name:
                problems.append(f"editor payload key mismatch for {name!r}")
            for ns, titles in payload.get("top_pages", {}).items():
                for title in titles:
                    if PageRef(title, int(ns)) not in self.pages:
                        problems.append(f"{name!r} top page {title!r} (ns {ns}) not in pages")
            for ev in payload.get("edits", []):
                if ev["editor"] != name:
                    problems.append(f"edit by {ev['editor']!r} filed under {name!r}")
            score = payload.get("admin_score")
            if score is not None and not math.isfinite(float(score)):
                problems.append(f"{name!r} admin score not finite")
        if problems:
            preview = "; ".join(problems[:5])
            raise SchemaMismatch(f"{len(problems)} unresolved fixture references: {preview}")

    @classmethod
    def load(cls, directory: str | Path) -> FixtureBundle:
        root = Path(directory)
        meta_path = root / "meta"
        if not root.is_dir() or not meta_path.exists():
            raise FileNotFoundError(f"not a fixture bundle: {root}")
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        bundle = cls(
            schema_version=str(meta.get("schema_version")),
            snapshot_at=int(meta.get("snapshot_at", 0)),
        )
        if bundle.schema_version != SCHEMA_VERSION:
            raise SchemaMismatch(
                f"fixture schema {bundle.schema_version!r} unsupported (expected {SCHEMA_VERSION!r})"
            )
        for payload in _read_ndjson(root / "editors.ndjson"):
            bundle.editors[payload["id"]] = payload
        for rec in _read_ndjson(root / "pages.ndjson"):
            page = PageRef(rec["title"], int(rec["namespace"]))
            bundle.pages[page] = [(r["editor"], int(r["timestamp"])) for r in rec["revisions"]]
        ml = root / "missing_list.ndjson"
        if ml.exists():
            with open(ml, encoding="utf-8") as fh:
                bundle.missing_list = parse_missing_lines(fh, path=str(ml))
        bundle.pool = [rec["editor"] for rec in _read_ndjson(root / "pool.ndjson")]
        bundle.validate()
        return bundle

    def write(self, directory: str | Path) -> None:
        root = Path(directory)
        root.mkdir(parents=True, exist_ok=True)
        meta = {
            "schema_version": self.schema_version,
            "snapshot_at": self.snapshot_at,
            "counts": self.counts(),
        }
        (root / "meta").write_text(dumps(meta) + "\n", encoding="utf-8")
        with open(root / "editors.ndjson", "w", encoding="utf-8") as fh:
            for name in sorted(self.editors):
                fh.write(dumps(self.editors[name]) + "\n")
        with open(root / "pages.ndjson", "w", encoding="utf-8") as fh:
            for page in sorted(self.pages, key=lambda p: (p.namespace, p.title)):
                revs = [{"editor": e, "timestamp": t} for e, t in self.pages[page]]
                fh.write(dumps({**page.to_dict(), "revisions": revs}) + "\n")
        with open(root / "missing_list.ndjson", "w", encoding="utf-8") as fh:
            for entry in self.missing_list:
                fh.write(dumps(entry.to_dict()) + "\n")
        pool_path = root / "pool.ndjson"
        if self.pool:
            with open(pool_path, "w", encoding="utf-8") as fh:
                for name in self.pool:
                    fh.write(dumps({"editor": name}) + "\n")
        elif pool_path.exists():
            pool_path.unlink()


def read_manifest(directory: str | Path) -> dict[str, Any]:
    return json.loads((Path(directory) / "meta").read_text(encoding="utf-8"))


def copy_bundle(src: str | Path, dst: str | Path) -> None:
    dst = Path(dst)
    dst.mkdir(parents=True, exist_ok=True)
    for name in (*BUNDLE_FILES, "pool.ndjson"):
        path = Path(src) / name
        if path.exists():
            shutil.copyfile(path, dst / name)


class FixtureSource(DataSource):
    """Read-only, deterministic source backed by a :class:`FixtureBundle`."""

    def __init__(self, bundle: FixtureBundle):
        self.bundle = bundle

    @classmethod
    def from_dir(cls, directory: str | Path) -> FixtureSource:
        return cls(FixtureBundle.load(directory))

    def _editor(self, editor: str) -> dict[str, Any]:
        try:
            return self.bundle.editors[editor]
        except KeyError:
            raise UnknownEditor(editor) from None

    def fetch_latest_edits(self, editor: str, limit: int) -> list[EditEvent]:
        check_limit(limit)
        payload = self._editor(editor)
        events = [EditEvent.from_dict(d) for d in payload.get("edits", [])]
        events = [ev for ev in events if not ev.automated]
        events.sort(key=lambda ev: -ev.timestamp)
        return events[:limit]

    def fetch_top_pages(self, editor: str, namespace: int, k: int) -> list[tuple[PageRef, int]]:
        check_limit(k, "k")
        payload = self._editor(editor)
        counts = payload.get("top_pages", {}).get(str(namespace), {})
        ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        return [(PageRef(title, namespace), int(n)) for title, n in ranked[:k]]

    def fetch_page_revisions(self, page: PageRef, limit: int) -> list[tuple[str, int]]:
        check_limit(limit)
        try:
            revs = self.bundle.pages[page]
        except KeyError:
            raise UnknownPage(page.title, page.namespace) from None
        ordered = sorted(revs, key=lambda r: -r[1])
        return ordered[:limit]

    def fetch_admin_score(self, editor: str) -> AdminScoreRecord:
        payload = self._editor(editor)
        score = payload.get("admin_score")
        if score is None:
            raise SourceUnavailable(f"fixture carries no admin score for {editor!r}")
        return AdminScoreRecord(editor=editor, score=float(score), fetched_at=self.bundle.snapshot_at)

    def fetch_user_page_text(self, editor: str) -> str:
        payload = self.bundle.editors.get(editor)
        if payload is None:
            return ""
        return payload.get("user_page") or ""

    def fetch_editor_summary(self, editor: str) -> EditorSummary:
        p = self._editor(editor)
        return EditorSummary(
            editor=editor,
            total_edits=int(p["total_edits"]),
            first_edit=int(p["first_edit"]),
            last_edit=int(p["last_edit"]),
            edits_by_year={int(y): int(c) for y, c in p.get("edits_by_year", {}).items()},
        )

    def fetch_revert_counts(self, editor: str, k: int = 50) -> list[tuple[PageRef, int]]:
        reverts = self._editor(editor).get("reverts", {})
        return [(page, int(reverts.get(page.title, 0))) for page, _ in self.fetch_top_pages(editor, 0, k)]

    def edited_in_year(self, editor: str, year: int) -> bool:
        return self.fetch_editor_summary(editor).edits_by_year.get(year, 0) > 0

    def missing_list(self) -> list[MissingEntry]:
        return list(self.bundle.missing_list)

    def pool(self) -> list[str]:
        return list(self.bundle.pool)
