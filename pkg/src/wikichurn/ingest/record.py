from __future__ import annotations

import threading
from typing import Any

from .fixture import FixtureBundle
from .source import DataSource
from .types import AdminScoreRecord, EditEvent, EditorSummary, MissingEntry, PageRef


class RecordingSource(DataSource):
    """Delegating source that remembers every answer as fixture-bundle content.

    Running a pipeline stage through this wrapper against the live backend
    yields a bundle that replays the same answers offline.
    """

    def __init__(self, inner: DataSource, missing: list[MissingEntry] | None = None):
        self.inner = inner
        self._lock = threading.Lock()
        self._editors: dict[str, dict[str, Any]] = {}
        self._pages: dict[PageRef, list[tuple[str, int]]] = {}
        self._missing = list(missing or [])
        self._pool: list[str] = []

    def _payload(self, editor: str) -> dict[str, Any]:
        return self._editors.setdefault(editor, {"id": editor})

    def fetch_latest_edits(self, editor: str, limit: int) -> list[EditEvent]:
        events = self.inner.fetch_latest_edits(editor, limit)
        with self._lock:
            self._payload(editor)["edits"] = [ev.to_dict() for ev in events]
        return events

    def fetch_top_pages(self, editor: str, namespace: int, k: int) -> list[tuple[PageRef, int]]:
        pages = self.inner.fetch_top_pages(editor, namespace, k)
        with self._lock:
            top = self._payload(editor).setdefault("top_pages", {})
            slot = top.setdefault(str(namespace), {})
            for page, n in pages:
                slot[page.title] = n
                self._pages.setdefault(page, [])
        return pages

    def fetch_page_revisions(self, page: PageRef, limit: int) -> list[tuple[str, int]]:
        revs = self.inner.fetch_page_revisions(page, limit)
        with self._lock:
            self._pages[page] = list(revs)
        return revs

    def fetch_admin_score(self, editor: str) -> AdminScoreRecord:
        rec = self.inner.fetch_admin_score(editor)
        with self._lock:
            self._payload(editor)["admin_score"] = rec.score
        return rec

    def fetch_user_page_text(self, editor: str) -> str:
        text = self.inner.fetch_user_page_text(editor)
        with self._lock:
            self._payload(editor)["user_page"] = text
        return text

    def fetch_editor_summary(self, editor: str) -> EditorSummary:
        summary = self.inner.fetch_editor_summary(editor)
        with self._lock:
            p = self._payload(editor)
            d = summary.to_dict()
            for key in ("total_edits", "first_edit", "last_edit"):
                p[key] = d[key]
            p.setdefault("edits_by_year", {}).update(d["edits_by_year"])
        return summary

    def fetch_revert_counts(self, editor: str, k: int = 50) -> list[tuple[PageRef, int]]:
        counts = self.inner.fetch_revert_counts(editor, k)
        with self._lock:
            p = self._payload(editor)
            p["reverts"] = {page.title: n for page, n in counts}
            slot = p.setdefault("top_pages", {}).setdefault("0", {})
            for page, _ in counts:
                slot.setdefault(page.title, 1)
                self._pages.setdefault(page, [])
        return counts

    def edited_in_year(self, editor: str, year: int) -> bool:
        hit = self.inner.edited_in_year(editor, year)
        with self._lock:
            years = self._payload(editor).setdefault("edits_by_year", {})
            years[str(year)] = max(int(years.get(str(year), 0)), 1 if hit else 0)
        return hit

    def missing_list(self) -> list[MissingEntry]:
        return list(self._missing)

    def add_pool(self, editors: list[str]) -> None:
        self._pool.extend(editors)

    def bundle(self, snapshot_at: int) -> FixtureBundle:
        """Assemble everything seen so far; payloads lacking summaries get zeros."""
        with self._lock:
            editors = {}
            for name, p in self._editors.items():
                payload = {
                    "id": name,
                    "total_edits": 0,
                    "first_edit": 0,
                    "last_edit": 0,
                    "edits_by_year": {},
                    "edits": [],
                    "top_pages": {},
                    "reverts": {},
                    "admin_score": None,
                    "user_page": None,
                }
                payload.update(p)
                editors[name] = payload
            for entry in self._missing:
                editors.setdefault(entry.editor, {"id": entry.editor, "total_edits": 0,
                                                  "first_edit": 0, "last_edit": 0})
            return FixtureBundle(
                editors=editors,
                pages=dict(self._pages),
                missing_list=list(self._missing),
                pool=list(self._pool),
                snapshot_at=snapshot_at,
            )
