"""Rate-limited, retrying, caching JSON-over-HTTP client for the live backend."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
import urllib.error
import urllib.parse
import urllib.request
from pathlib import Path
from typing import Any, Callable, Mapping

from ..errors import SourceUnavailable

log = logging.getLogger(__name__)

CACHE_DIR_ENV = "WIKICHURN_CACHE_DIR"
USER_AGENT = "wikichurn/0.1 (editor retention research; read-only)"

Clock = Callable[[], float]
Sleep = Callable[[float], None]


class HttpError(Exception):
    def __init__(self, status: int, url: str):
        super().__init__(f"HTTP {status} for {url}")
        self.status = status
        self.url = url


class TransientError(Exception):
    """A failure worth retrying (timeouts, connection resets, 5xx, 429)."""


Transport = Callable[[str, float], bytes]


def urllib_transport(url: str, timeout: float) -> bytes:
    req = urllib.request.Request(url, headers={"User-Agent": USER_AGENT})
    try:
        with urllib.request.urlopen(req, timeout=timeout) as resp:
            return resp.read()
    except urllib.error.HTTPError as exc:
        if exc.code == 429 or exc.code >= 500:
            raise TransientError(f"HTTP {exc.code}") from exc
        raise HttpError(exc.code, url) from exc
    except (urllib.error.URLError, TimeoutError, ConnectionError) as exc:
        raise TransientError(str(exc)) from exc


class RateLimiter:
    """Spaces requests at least ``1/rate`` seconds apart.

    With that spacing no half-open one-second window ever holds more than
    ``rate`` requests. Slots are reserved under a lock and slept on outside it,
    so concurrent callers queue fairly.
    """

    def __init__(self, rate: float, clock: Clock = time.monotonic, sleep: Sleep = time.sleep):
        if rate <= 0:
            raise ValueError("rate must be positive")
        self.interval = 1.0 / rate
        self._clock = clock
        self._sleep = sleep
        self._next = -float("inf")
        self._lock = threading.Lock()

    def acquire(self) -> float:
        with self._lock:
            now = self._clock()
            slot = max(now, self._next)
            self._next = slot + self.interval
        if slot > now:
            self._sleep(slot - now)
        return slot


class TTLCache:
    """Thread-safe key/value cache with expiry, optionally mirrored to disk."""

    def __init__(self, ttl: float, directory: str | Path | None = None, clock: Clock = time.time):
        self.ttl = ttl
        self.directory = Path(directory) if directory else None
        self._clock = clock
        self._mem: dict[str, tuple[float, Any]] = {}
        self._lock = threading.Lock()
        if self.directory:
            self.directory.mkdir(parents=True, exist_ok=True)

    def _path(self, key: str) -> Path:
        assert self.directory is not None
        return self.directory / (hashlib.sha256(key.encode("utf-8")).hexdigest() + ".json")

    def get(self, key: str) -> Any | None:
        now = self._clock()
        with self._lock:
            hit = self._mem.get(key)
            if hit is None and self.directory:
                path = self._path(key)
                if path.exists():
                    rec = json.loads(path.read_text(encoding="utf-8"))
                    hit = (rec["stored_at"], rec["value"])
                    self._mem[key] = hit
            if hit is None:
                return None
            stored_at, value = hit
            if now - stored_at > self.ttl:
                self._mem.pop(key, None)
                return None
            return value

    def put(self, key: str, value: Any) -> None:
        now = self._clock()
        with self._lock:
            self._mem[key] = (now, value)
            if self.directory:
                rec = {"key": key, "stored_at": now, "value": value}
                tmp = self._path(key).with_suffix(".tmp")
                tmp.write_text(json.dumps(rec, sort_keys=True), encoding="utf-8")
                os.replace(tmp, self._path(key))


def resolve_cache_dir(configured: str | None) -> str | None:
    return os.environ.get(CACHE_DIR_ENV) or configured


class HttpClient:
    def __init__(
        self,
        rate: float = 5.0,
        retries: int = 3,
        backoff: float = 1.0,
        timeout: float = 30.0,
        cache: TTLCache | None = None,
        transport: Transport = urllib_transport,
        clock: Clock = time.monotonic,
        sleep: Sleep = time.sleep,
    ):
        self.limiter = RateLimiter(rate, clock=clock, sleep=sleep)
        self.retries = retries
        self.backoff = backoff
        self.timeout = timeout
        self.cache = cache
        self.transport = transport
        self._sleep = sleep
        self.upstream_calls = 0
        self._count_lock = threading.Lock()

    @staticmethod
    def build_url(base: str, params: Mapping[str, Any] | None = None) -> str:
        if not params:
            return base
        query = urllib.parse.urlencode(sorted((k, str(v)) for k, v in params.items()))
        return f"{base}?{query}"

    def get_json(self, base: str, params: Mapping[str, Any] | None = None, use_cache: bool = True) -> Any:
        url = self.build_url(base, params)
        if use_cache and self.cache is not None:
            hit = self.cache.get(url)
            if hit is not None:
                return hit
        payload = self._fetch(url)
        if use_cache and self.cache is not None:
            self.cache.put(url, payload)
        return payload

    def _fetch(self, url: str) -> Any:
        # retries follow the first attempt with delays backoff * 1, 2, 4, ...
        for attempt in range(self.retries + 1):
            self.limiter.acquire()
            with self._count_lock:
                self.upstream_calls += 1
            try:
                body = self.transport(url, self.timeout)
                return json.loads(body)
            except TransientError as exc:
                if attempt == self.retries:
                    raise SourceUnavailable(f"{url}: {exc} (after {attempt + 1} attempts)") from exc
                delay = self.backoff * (2**attempt)
                log.info("transient failure on %s (%s); retrying in %.1fs", url, exc, delay)
                self._sleep(delay)
            except json.JSONDecodeError as exc:
                raise SourceUnavailable(f"{url}: malformed JSON") from exc
        raise AssertionError("unreachable")
