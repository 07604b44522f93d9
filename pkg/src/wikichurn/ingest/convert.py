"""Convert Missing Wikipedians wikitext into a missing-list snapshot.

The listing is loosely formatted; this converter only understands lines that
carry a user link and a recognisable date, e.g.::

    * [[User:Example|Example]] - last edit 2015-03-02
    * {{user|Example}} (last edited 2 March 2015)
    * [[User:Example]] ... March 2015

Month-only dates resolve to the first of the month. Unrecognised lines are
skipped and counted.

Usage: ``python -m wikichurn.ingest.convert listing.wiki > missing_list.ndjson``
"""

from __future__ import annotations

import re
import sys
from datetime import date, datetime
from typing import Iterable

from .fixture import dumps
from .missing_list import SCHEMA_VERSION

_USER_RE = re.compile(r"\[\[\s*User:([^|\]/]+)|\{\{\s*[Uu]ser\w*\s*\|\s*([^|}]+)")
_ISO_RE = re.compile(r"\b(\d{4})-(\d{2})-(\d{2})\b")
_DMY_RE = re.compile(r"\b(\d{1,2}) ([A-Z][a-z]+) (\d{4})\b")
_MY_RE = re.compile(r"\b([A-Z][a-z]+) (\d{4})\b")


def _parse_date(line: str) -> date | None:
    if m := _ISO_RE.search(line):
        return date(int(m[1]), int(m[2]), int(m[3]))
    if m := _DMY_RE.search(line):
        try:
            return datetime.strptime(f"{m[1]} {m[2]} {m[3]}", "%d %B %Y").date()
        except ValueError:
            pass
    for m in _MY_RE.finditer(line):
        try:
            return datetime.strptime(f"1 {m[1]} {m[2]}", "%d %B %Y").date()
        except ValueError:
            continue
    return None


def convert(lines: Iterable[str]) -> tuple[list[dict[str, str]], int]:
    records: list[dict[str, str]] = []
    skipped = 0
    for line in lines:
        m = _USER_RE.search(line)
        if not m:
            continue
        name = (m[1] or m[2]).strip().replace("_", " ")
        when = _parse_date(line[m.end():])
        if when is None:
            skipped += 1
            continue
        records.append({"editor": name, "last_edit_date": when.isoformat()})
    return records, skipped


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 1:
        print(__doc__, file=sys.stderr)
        return 2
    with open(argv[0], encoding="utf-8") as fh:
        records, skipped = convert(fh)
    sys.stdout.write(dumps({"schema_version": SCHEMA_VERSION}) + "\n")
    for rec in records:
        sys.stdout.write(dumps(rec) + "\n")
    print(f"{len(records)} entries converted, {skipped} skipped", file=sys.stderr)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
