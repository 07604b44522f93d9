from __future__ import annotations

import abc

from .types import AdminScoreRecord, EditEvent, EditorSummary, MissingEntry, PageRef


class DataSource(abc.ABC):
    """Uniform read interface over the live wiki APIs and local fixture bundles.

    Implementations must be safe to call from several threads at once.
    """

    @abc.abstractmethod
    def fetch_latest_edits(self, editor: str, limit: int) -> list[EditEvent]:
        """Newest-first non-automated edits, at most ``limit`` of them."""

    @abc.abstractmethod
    def fetch_top_pages(self, editor: str, namespace: int, k: int) -> list[tuple[PageRef, int]]:
        """The editor's most-edited pages in ``namespace``.

        Sorted by edit count descending, ties by title ascending.
        """

    @abc.abstractmethod
    def fetch_page_revisions(self, page: PageRef, limit: int) -> list[tuple[str, int]]:
        """Newest-first ``(editor, timestamp)`` pairs of the latest revisions."""

    @abc.abstractmethod
    def fetch_admin_score(self, editor: str) -> AdminScoreRecord: ...

    @abc.abstractmethod
    def fetch_user_page_text(self, editor: str) -> str:
        """Raw user page markup, or ``""`` when the page does not exist."""

    @abc.abstractmethod
    def fetch_editor_summary(self, editor: str) -> EditorSummary: ...

    @abc.abstractmethod
    def fetch_revert_counts(self, editor: str, k: int = 50) -> list[tuple[PageRef, int]]:
        """Reverted-edit counts on each of the editor's top ``k`` main-namespace pages."""

    @abc.abstractmethod
    def edited_in_year(self, editor: str, year: int) -> bool: ...

    def missing_list(self) -> list[MissingEntry]:
        raise NotImplementedError(f"{type(self).__name__} carries no missing list")

    def pool(self) -> list[str]:
        """Editors to monitor for risk scoring (empty when the source has none)."""
        return []


def check_limit(limit: int, name: str = "limit") -> None:
    if not isinstance(limit, int) or limit < 1:
        raise ValueError(f"{name} must be a positive integer, got {limit!r}")
