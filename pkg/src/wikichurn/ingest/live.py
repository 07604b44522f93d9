"""Live backend over the MediaWiki Action API, XTools and ORES.

Every URL is configurable; the defaults target English Wikipedia. Responses
are parsed defensively because the upstream tools have changed their JSON
shapes over time.
"""

from __future__ import annotations

import logging
import threading
import time
import urllib.parse
from collections import Counter
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Any, Callable

from ..errors import SourceUnavailable, UnknownEditor, UnknownPage
from .http import HttpClient, HttpError, TTLCache, resolve_cache_dir
from .source import DataSource, check_limit
from .types import NAMESPACE_PREFIX, AdminScoreRecord, EditEvent, EditorSummary, PageRef

log = logging.getLogger(__name__)

REVERTED_TAG = "mw-reverted"
_BATCH = 50


@dataclass
class LiveConfig:
    api_url: str = "https://en.wikipedia.org/w/api.php"
    xtools_url: str = "https://xtools.wmcloud.org/api"
    ores_url: str = "https://ores.wikimedia.org/v3/scores/enwiki/"
    project: str = "en.wikipedia.org"
    nonautomated_url: str = "{xtools}/user/nonautomated_edits/{project}/{user}/all"
    top_edits_url: str = "{xtools}/user/top_edits/{project}/{user}/{namespace}"
    admin_score_url: str = "{xtools}/user/adminscore/{project}/{user}"
    rate: float = 5.0
    retries: int = 3
    backoff: float = 1.0
    timeout: float = 30.0
    cache_dir: str | None = None
    cache_ttl: float = 86400.0

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> LiveConfig:
        known = {k: v for k, v in d.items() if k in cls.__dataclass_fields__}
        return cls(**known)


def parse_timestamp(value: Any) -> int:
    """Accept ISO 8601 (``2020-01-02T03:04:05Z``) or MediaWiki ``YYYYMMDDhhmmss``."""
    if isinstance(value, (int, float)):
        return int(value)
    text = str(value).strip()
    if text.isdigit() and len(text) == 14:
        dt = datetime.strptime(text, "%Y%m%d%H%M%S")
    else:
        dt = datetime.fromisoformat(text.replace("Z", "+00:00"))
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def _strip_prefix(title: str, namespace: int) -> str:
    prefix = NAMESPACE_PREFIX.get(namespace, "")
    if prefix and title.startswith(prefix):
        return title[len(prefix):]
    return title


def _quote(user: str) -> str:
    return urllib.parse.quote(user.replace(" ", "_"), safe="")


class LiveSource(DataSource):
    def __init__(
        self,
        config: LiveConfig | None = None,
        client: HttpClient | None = None,
        wall_clock: Callable[[], float] = time.time,
    ):
        self.config = config or LiveConfig()
        if client is None:
            cache = TTLCache(self.config.cache_ttl, resolve_cache_dir(self.config.cache_dir))
            client = HttpClient(
                rate=self.config.rate,
                retries=self.config.retries,
                backoff=self.config.backoff,
                timeout=self.config.timeout,
                cache=cache,
            )
        self.client = client
        self._wall_clock = wall_clock
        self._admin_cache = TTLCache(self.config.cache_ttl, clock=wall_clock)
        self._admin_lock = threading.Lock()

    def _xtools(self, template: str, **kw: Any) -> str:
        c = self.config
        return template.format(xtools=c.xtools_url.rstrip("/"), project=c.project, **kw)

    def _xtools_get(self, url: str, editor: str) -> Any:
        try:
            data = self.client.get_json(url)
        except HttpError as exc:
            if exc.status == 404:
                raise UnknownEditor(editor) from None
            raise SourceUnavailable(str(exc)) from exc
        if isinstance(data, dict) and "error" in data:
            raise UnknownEditor(editor)
        return data

    def _api(self, **params: Any) -> dict[str, Any]:
        params = {"format": "json", "formatversion": 2, **params}
        try:
            return self.client.get_json(self.config.api_url, params)
        except HttpError as exc:
            raise SourceUnavailable(str(exc)) from exc

    # -- edits ------------------------------------------------------------

    def fetch_latest_edits(self, editor: str, limit: int) -> list[EditEvent]:
        check_limit(limit)
        url = self._xtools(self.config.nonautomated_url, user=_quote(editor))
        data = self._xtools_get(url, editor)
        rows = data.get("nonautomated_edits", []) if isinstance(data, dict) else data
        raw = []
        for row in rows:
            ns = int(row.get("namespace", row.get("page_namespace", 0)))
            if ns not in NAMESPACE_PREFIX:
                ns = -1
            raw.append((row, ns))
        raw.sort(key=lambda r: (-parse_timestamp(r[0]["timestamp"]), -int(r[0].get("rev_id", 0))))
        raw = raw[:limit]
        revids = [int(r.get("rev_id", 0)) for r, _ in raw if r.get("rev_id")]
        ores = self._ores_scores(revids)
        reverted = self._reverted_revids(revids)
        events = []
        for row, ns in raw:
            if ns < 0:
                # outside the studied namespaces; kept out of the window entirely
                continue
            rev = int(row.get("rev_id", 0))
            damaging, goodfaith = ores.get(rev, (None, None))
            events.append(
                EditEvent(
                    editor=editor,
                    page=PageRef(_strip_prefix(str(row["page_title"]).replace("_", " "), ns), ns),
                    timestamp=parse_timestamp(row["timestamp"]),
                    byte_delta=int(row.get("length_change", 0) or 0),
                    minor=bool(row.get("minor", False)),
                    ores_damaging_prob=damaging,
                    ores_goodfaith_prob=goodfaith,
                    reverted=rev in reverted,
                )
            )
        return events

    def _ores_scores(self, revids: list[int]) -> dict[int, tuple[float | None, float | None]]:
        out: dict[int, tuple[float | None, float | None]] = {}
        for i in range(0, len(revids), _BATCH):
            batch = revids[i : i + _BATCH]
            params = {"models": "damaging|goodfaith", "revids": "|".join(map(str, batch))}
            try:
                data = self.client.get_json(self.config.ores_url, params)
            except HttpError as exc:
                log.warning("ORES lookup failed (%s); edits left unscored", exc)
                continue
            scores = data
            if isinstance(data, dict) and len(data) == 1 and "scores" in next(iter(data.values()), {}):
                scores = next(iter(data.values()))["scores"]
            for rev, models in (scores or {}).items():
                out[int(rev)] = (_ores_prob(models, "damaging"), _ores_prob(models, "goodfaith"))
        return out

    def _reverted_revids(self, revids: list[int]) -> set[int]:
        flagged: set[int] = set()
        for i in range(0, len(revids), _BATCH):
            batch = revids[i : i + _BATCH]
            data = self._api(action="query", prop="revisions", rvprop="ids|tags", revids="|".join(map(str, batch)))
            for page in data.get("query", {}).get("pages", []):
                for rev in page.get("revisions", []):
                    if REVERTED_TAG in rev.get("tags", []):
                        flagged.add(int(rev["revid"]))
        return flagged

    # -- pages ------------------------------------------------------------

    def fetch_top_pages(self, editor: str, namespace: int, k: int) -> list[tuple[PageRef, int]]:
        check_limit(k, "k")
        url = self._xtools(self.config.top_edits_url, user=_quote(editor), namespace=namespace)
        data = self._xtools_get(url, editor)
        rows = data.get("top_edits", data) if isinstance(data, dict) else data
        if isinstance(rows, dict):
            rows = rows.get(str(namespace), [])
        counts: Counter[str] = Counter()
        for row in rows:
            if int(row.get("namespace", row.get("page_namespace", namespace))) != namespace:
                continue
            title = _strip_prefix(str(row["page_title"]).replace("_", " "), namespace)
            counts[title] += int(row.get("count", row.get("edits", 0)))
        ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:k]
        return [(PageRef(t, namespace), n) for t, n in ranked]

    def fetch_page_revisions(self, page: PageRef, limit: int) -> list[tuple[str, int]]:
        check_limit(limit)
        data = self._api(
            action="query", prop="revisions", titles=page.full_title,
            rvlimit=min(limit, 500), rvprop="user|timestamp",
        )
        pages = data.get("query", {}).get("pages", [])
        if not pages or pages[0].get("missing") or pages[0].get("invalid"):
            raise UnknownPage(page.title, page.namespace)
        out = []
        for rev in pages[0].get("revisions", []):
            if "user" not in rev or rev.get("userhidden"):
                continue
            out.append((rev["user"], parse_timestamp(rev["timestamp"])))
        out.sort(key=lambda r: -r[1])
        return out[:limit]

    # -- per-editor scalars -----------------------------------------------

    def fetch_admin_score(self, editor: str) -> AdminScoreRecord:
        key = f"admin:{editor}"
        with self._admin_lock:
            hit = self._admin_cache.get(key)
            if hit is not None:
                return AdminScoreRecord.from_dict(hit)
            url = self._xtools(self.config.admin_score_url, user=_quote(editor))
            data = self._xtools_get(url, editor)
            score = _first_number(data, ("total", "score", "adminscore", "admin_score"))
            if score is None:
                raise SourceUnavailable(f"no admin score in response for {editor!r}")
            rec = AdminScoreRecord(editor=editor, score=score, fetched_at=int(self._wall_clock()))
            self._admin_cache.put(key, rec.to_dict())
            return rec

    def fetch_user_page_text(self, editor: str) -> str:
        data = self._api(action="parse", page=f"User:{editor}", prop="text")
        if "error" in data:
            if data["error"].get("code") in ("missingtitle", "invalidtitle"):
                return ""
            raise SourceUnavailable(f"user page for {editor!r}: {data['error'].get('info')}")
        text = data.get("parse", {}).get("text", "")
        if isinstance(text, dict):
            text = text.get("*", "")
        return text

    def _first_contrib(self, editor: str, **params: Any) -> dict[str, Any] | None:
        data = self._api(action="query", list="usercontribs", ucuser=editor, uclimit=1, ucprop="timestamp", **params)
        contribs = data.get("query", {}).get("usercontribs", [])
        return contribs[0] if contribs else None

    def fetch_editor_summary(self, editor: str) -> EditorSummary:
        data = self._api(action="query", list="users", ususers=editor, usprop="editcount|registration")
        users = data.get("query", {}).get("users", [])
        if not users or users[0].get("missing") or users[0].get("invalid"):
            raise UnknownEditor(editor)
        last = self._first_contrib(editor)
        first = self._first_contrib(editor, ucdir="newer")
        if last is None or first is None:
            raise UnknownEditor(editor)
        return EditorSummary(
            editor=editor,
            total_edits=int(users[0].get("editcount", 0)),
            first_edit=parse_timestamp(first["timestamp"]),
            last_edit=parse_timestamp(last["timestamp"]),
        )

    def edited_in_year(self, editor: str, year: int) -> bool:
        hit = self._first_contrib(
            editor, ucstart=f"{year}-12-31T23:59:59Z", ucend=f"{year}-01-01T00:00:00Z"
        )
        return hit is not None

    def fetch_revert_counts(self, editor: str, k: int = 50) -> list[tuple[PageRef, int]]:
        top = self.fetch_top_pages(editor, 0, k)
        wanted = {page.title for page, _ in top}
        counts: Counter[str] = Counter()
        params: dict[str, Any] = {
            "action": "query", "list": "usercontribs", "ucuser": editor, "ucnamespace": 0,
            "uctag": REVERTED_TAG, "uclimit": 500, "ucprop": "title",
        }
        for _ in range(20):
            data = self._api(**params)
            for c in data.get("query", {}).get("usercontribs", []):
                if c["title"] in wanted:
                    counts[c["title"]] += 1
            cont = data.get("continue", {}).get("uccontinue")
            if not cont:
                break
            params["uccontinue"] = cont
        return [(page, counts.get(page.title, 0)) for page, _ in top]


def _ores_prob(models: dict[str, Any], name: str) -> float | None:
    try:
        return float(models[name]["score"]["probability"]["true"])
    except (KeyError, TypeError, ValueError):
        return None


def _first_number(data: Any, keys: tuple[str, ...]) -> float | None:
    if isinstance(data, (int, float)):
        return float(data)
    if isinstance(data, dict):
        for key in keys:
            if key in data:
                try:
                    return float(data[key])
                except (TypeError, ValueError):
                    pass
        for value in data.values():
            found = _first_number(value, keys) if isinstance(value, dict) else None
            if found is not None:
                return found
    return None
