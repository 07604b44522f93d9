"""Parsing of Missing Wikipedians snapshots (pre-extracted, line-delimited)."""

from __future__ import annotations

import json
import logging
from datetime import date
from pathlib import Path
from typing import Iterable

from ..errors import ParseError, SchemaMismatch
from .types import MissingEntry, check_editor_id

log = logging.getLogger(__name__)

SCHEMA_VERSION = "1"


def parse_missing_lines(lines: Iterable[str], path: str | None = None) -> list[MissingEntry]:
    """Parse ``{"editor": ..., "last_edit_date": "YYYY-MM-DD"}`` records.

    An optional first record ``{"schema_version": ...}`` is checked against
    the supported version. Duplicate usernames keep the first occurrence.
    """
    entries: list[MissingEntry] = []
    seen: set[str] = set()
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON ({exc.msg})", line=lineno, path=path) from None
        if not isinstance(rec, dict):
            raise ParseError("record is not an object", line=lineno, path=path)
        if "schema_version" in rec and "editor" not in rec:
            if str(rec["schema_version"]) != SCHEMA_VERSION:
                raise SchemaMismatch(
                    f"missing-list schema {rec['schema_version']!r} unsupported "
                    f"(expected {SCHEMA_VERSION!r})"
                )
            continue
        editor = rec.get("editor")
        try:
            check_editor_id(editor)
        except ValueError:
            raise ParseError(f"bad editor name {editor!r}", line=lineno, path=path) from None
        raw_date = rec.get("last_edit_date")
        try:
            when = date.fromisoformat(str(raw_date))
        except ValueError:
            raise ParseError(
                f"unparseable last_edit_date {raw_date!r} for editor {editor!r}",
                line=lineno,
                path=path,
            ) from None
        if editor in seen:
            log.warning("duplicate missing-list entry %r at line %d ignored", editor, lineno)
            continue
        seen.add(editor)
        entries.append(MissingEntry(editor=editor, last_edit_date=when))
    return entries


def load_missing_list(source: str | Path | Iterable[str]) -> list[MissingEntry]:
    if isinstance(source, (str, Path)):
        path = Path(source)
        with open(path, encoding="utf-8") as fh:
            return parse_missing_lines(fh, path=str(path))
    return parse_missing_lines(source)
