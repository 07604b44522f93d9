from __future__ import annotations

import json
from datetime import date

import pytest

from wikichurn.errors import (
    ParseError,
    SchemaMismatch,
    SourceUnavailable,
    UnknownEditor,
    UnknownPage,
)
from wikichurn.ingest.convert import convert
from wikichurn.ingest.fixture import FixtureBundle, FixtureSource, copy_bundle, read_manifest
from wikichurn.ingest.http import (
    CACHE_DIR_ENV,
    HttpClient,
    HttpError,
    RateLimiter,
    TransientError,
    TTLCache,
    resolve_cache_dir,
)
from wikichurn.ingest.live import LiveConfig, LiveSource, parse_timestamp
from wikichurn.ingest.missing_list import load_missing_list, parse_missing_lines
from wikichurn.ingest.record import RecordingSource
from wikichurn.ingest.types import EditEvent, EditorSummary, PageRef


class FakeClock:
    def __init__(self, t: float = 1000.0):
        self.t = t
        self.sleeps: list[float] = []

    def __call__(self) -> float:
        return self.t

    def sleep(self, dt: float) -> None:
        self.sleeps.append(dt)
        self.t += dt


class TestTypes:
    def test_page_full_title(self):
        assert PageRef("Foo", 5).full_title == "Wikipedia talk:Foo"
        assert PageRef("Foo", 0).full_title == "Foo"

    def test_page_rejects_other_namespace(self):
        with pytest.raises(ValueError):
            PageRef("Foo", 2)

    def test_edit_event_round_trip(self):
        ev = EditEvent("A", PageRef("P", 1), 10, -3, True, 0.25, 0.5, True, False)
        assert EditEvent.from_dict(json.loads(json.dumps(ev.to_dict()))) == ev

    @pytest.mark.parametrize("bad", [{"ores_damaging_prob": 1.5}, {"timestamp": 0}, {"editor": " A"}])
    def test_edit_event_validation(self, bad):
        kw = dict(editor="A", page=PageRef("P", 0), timestamp=10, byte_delta=0, minor=False)
        kw.update(bad)
        with pytest.raises(ValueError):
            EditEvent(**kw)

    def test_rate_uses_at_least_one_day(self):
        assert EditorSummary("A", 10, 0, 3600).avg_edits_per_day == 10.0
        assert EditorSummary("A", 10, 0, 5 * 86400).avg_edits_per_day == 2.0


class TestMissingList:
    def test_parses_and_dedupes(self):
        lines = [
            '{"schema_version": "1"}',
            "",
            '{"editor": "Alice", "last_edit_date": "2015-03-02"}',
            '{"editor": "Alice", "last_edit_date": "2016-01-01"}',
            '{"editor": "Bob", "last_edit_date": "2019-12-31"}',
        ]
        entries = parse_missing_lines(lines)
        assert [(e.editor, e.last_edit_date) for e in entries] == [
            ("Alice", date(2015, 3, 2)),
            ("Bob", date(2019, 12, 31)),
        ]

    def test_bad_date_reports_line_and_editor(self):
        with pytest.raises(ParseError) as info:
            parse_missing_lines(['{"editor": "A", "last_edit_date": "2015-01-01"}', '{"editor": "Zed", "last_edit_date": "March"}'])
        assert info.value.line == 2
        assert "Zed" in str(info.value)

    def test_bad_json(self):
        with pytest.raises(ParseError):
            parse_missing_lines(["{not json"])

    def test_schema_version(self):
        with pytest.raises(SchemaMismatch):
            parse_missing_lines(['{"schema_version": "9"}'])

    def test_load_from_path(self, tmp_path):
        p = tmp_path / "m.ndjson"
        p.write_text('{"editor": "A", "last_edit_date": "2015-01-01"}\n')
        assert load_missing_list(p)[0].editor == "A"


def test_convert_listing():
    lines = [
        "* [[User:Example One|Example]] - last edit 2015-03-02",
        "* {{user|Second_User}} (last edited 2 March 2014)",
        "* [[User:Third]] went away in March 2013",
        "* [[User:Nodate]] gone",
        "Plain prose line",
    ]
    records, skipped = convert(lines)
    assert records == [
        {"editor": "Example One", "last_edit_date": "2015-03-02"},
        {"editor": "Second User", "last_edit_date": "2014-03-02"},
        {"editor": "Third", "last_edit_date": "2013-03-01"},
    ]
    assert skipped == 1


class TestFixtureSource:
    def test_latest_edits_newest_first_without_automated(self, mini_source):
        edits = mini_source.fetch_latest_edits("E1", 100)
        assert len(edits) == 55
        ts = [e.timestamp for e in edits]
        assert ts == sorted(ts, reverse=True)
        assert not any(e.automated for e in edits)
        assert len(mini_source.fetch_latest_edits("E1", 50)) == 50

    def test_top_pages_ties_by_title(self, mini_source):
        top = mini_source.fetch_top_pages("E1", 0, 2)
        assert top == [(PageRef("A", 0), 5), (PageRef("B", 0), 5)]
        assert mini_source.fetch_top_pages("E1", 5, 3) == []

    def test_page_revisions(self, mini_source):
        revs = mini_source.fetch_page_revisions(PageRef("P1", 0), 3)
        assert [e for e, _ in revs] == ["M1", "S", "T"]
        with pytest.raises(UnknownPage):
            mini_source.fetch_page_revisions(PageRef("Nope", 0), 3)

    def test_unknown_editor(self, mini_source):
        with pytest.raises(UnknownEditor):
            mini_source.fetch_latest_edits("Nobody", 5)
        assert mini_source.fetch_user_page_text("Nobody") == ""

    def test_bad_limit(self, mini_source):
        with pytest.raises(ValueError):
            mini_source.fetch_latest_edits("E1", 0)

    def test_admin_score_and_year(self, mini_source):
        assert mini_source.fetch_admin_score("E1").score == pytest.approx(734.38)
        assert mini_source.edited_in_year("M3", 2020)
        assert not mini_source.edited_in_year("M1", 2020)

    def test_revert_counts(self, mini_source):
        assert mini_source.fetch_revert_counts("E1", 3) == [
            (PageRef("A", 0), 2), (PageRef("B", 0), 0), (PageRef("C", 0), 1)
        ]

    def test_round_trip(self, tmp_path, fixtures_dir):
        b = FixtureBundle.load(fixtures_dir / "mini")
        b.write(tmp_path / "copy")
        again = FixtureBundle.load(tmp_path / "copy")
        assert again.editors == b.editors
        assert again.pages == b.pages
        assert again.missing_list == b.missing_list
        assert read_manifest(tmp_path / "copy")["counts"] == b.counts()

    def test_copy_bundle(self, tmp_path, fixtures_dir):
        copy_bundle(fixtures_dir / "pipeline", tmp_path / "c")
        assert FixtureSource.from_dir(tmp_path / "c").pool() == FixtureSource.from_dir(fixtures_dir / "pipeline").pool()

    def test_dangling_reference(self, tmp_path, fixtures_dir):
        b = FixtureBundle.load(fixtures_dir / "mini")
        b.editors["E2"]["top_pages"] = {"0": {"Ghost": 1}}
        b.write(tmp_path / "bad")
        with pytest.raises(SchemaMismatch):
            FixtureBundle.load(tmp_path / "bad")

    def test_schema_version(self, tmp_path, fixtures_dir):
        b = FixtureBundle.load(fixtures_dir / "mini")
        b.schema_version = "2"
        with pytest.raises(SchemaMismatch):
            b.validate()

    def test_not_a_bundle(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            FixtureBundle.load(tmp_path)


class TestRateLimiter:
    def test_spacing_on_simulated_clock(self):
        clock = FakeClock()
        rl = RateLimiter(5.0, clock=clock, sleep=clock.sleep)
        slots = [rl.acquire() for _ in range(20)]
        # no half-open one-second window holds more than 5 requests
        for s in slots:
            assert sum(s <= t < s + 1.0 for t in slots) <= 5
        assert slots[-1] - slots[0] == pytest.approx(19 * 0.2)

    def test_idle_caller_does_not_wait(self):
        clock = FakeClock()
        rl = RateLimiter(2.0, clock=clock, sleep=clock.sleep)
        rl.acquire()
        clock.t += 10
        rl.acquire()
        assert clock.sleeps == []

    def test_rejects_bad_rate(self):
        with pytest.raises(ValueError):
            RateLimiter(0)


class TestTTLCache:
    def test_expiry(self):
        clock = FakeClock(0.0)
        c = TTLCache(10.0, clock=clock)
        c.put("k", {"v": 1})
        clock.t = 10.0
        assert c.get("k") == {"v": 1}
        clock.t = 10.5
        assert c.get("k") is None

    def test_disk_mirror(self, tmp_path):
        clock = FakeClock(0.0)
        TTLCache(10.0, tmp_path, clock=clock).put("k", [1, 2])
        assert TTLCache(10.0, tmp_path, clock=clock).get("k") == [1, 2]

    def test_env_overrides_configured_dir(self, monkeypatch, tmp_path):
        monkeypatch.setenv(CACHE_DIR_ENV, str(tmp_path))
        assert resolve_cache_dir("elsewhere") == str(tmp_path)
        monkeypatch.delenv(CACHE_DIR_ENV)
        assert resolve_cache_dir("elsewhere") == "elsewhere"


class TestHttpClient:
    def make(self, transport, **kw):
        clock = FakeClock()
        client = HttpClient(rate=100.0, transport=transport, clock=clock, sleep=clock.sleep, **kw)
        return client, clock

    def test_retries_with_backoff(self):
        calls = []

        def flaky(url, timeout):
            calls.append(url)
            if len(calls) < 3:
                raise TransientError("boom")
            return b'{"ok": true}'

        client, clock = self.make(flaky)
        assert client.get_json("http://x") == {"ok": True}
        assert len(calls) == 3
        assert [s for s in clock.sleeps if s >= 1.0] == [1.0, 2.0]

    def test_gives_up_after_three_retries(self):
        def down(url, timeout):
            raise TransientError("down")

        client, _ = self.make(down)
        with pytest.raises(SourceUnavailable):
            client.get_json("http://x")
        assert client.upstream_calls == 4

    def test_permanent_error_not_retried(self):
        def missing(url, timeout):
            raise HttpError(404, url)

        client, _ = self.make(missing)
        with pytest.raises(HttpError):
            client.get_json("http://x")
        assert client.upstream_calls == 1

    def test_malformed_json(self):
        client, _ = self.make(lambda url, timeout: b"<html>")
        with pytest.raises(SourceUnavailable):
            client.get_json("http://x")

    def test_cache_avoids_second_call(self):
        client, _ = self.make(lambda url, timeout: b"[1]", cache=TTLCache(60.0))
        client.get_json("http://x", {"b": 2, "a": 1})
        client.get_json("http://x", {"a": 1, "b": 2})
        assert client.upstream_calls == 1

    def test_url_params_sorted(self):
        assert HttpClient.build_url("http://x", {"b": 2, "a": "y z"}) == "http://x?a=y+z&b=2"


def test_parse_timestamp_formats():
    assert parse_timestamp("2020-01-02T03:04:05Z") == parse_timestamp("20200102030405") == 1577934245
    assert parse_timestamp(17) == 17


class FakeWeb:
    """Routes URLs to canned JSON by substring."""

    def __init__(self, routes):
        self.routes = routes
        self.seen: list[str] = []

    def __call__(self, url, timeout):
        self.seen.append(url)
        for key, value in self.routes:
            if key in url:
                if isinstance(value, Exception):
                    raise value
                return json.dumps(value).encode()
        raise HttpError(404, url)


def live(routes):
    web = FakeWeb(routes)
    clock = FakeClock()
    client = HttpClient(rate=1000.0, transport=web, clock=clock, sleep=clock.sleep)
    return LiveSource(LiveConfig(), client=client, wall_clock=lambda: 42.0), web


class TestLiveSource:
    def test_latest_edits(self):
        rows = [
            {"rev_id": 1, "timestamp": "2020-01-01T00:00:00Z", "page_title": "Foo_bar", "namespace": 0, "length_change": 5},
            {"rev_id": 2, "timestamp": "2020-01-03T00:00:00Z", "page_title": "Talk:Foo", "namespace": 1, "minor": True},
            {"rev_id": 3, "timestamp": "2020-01-02T00:00:00Z", "page_title": "User:Me", "namespace": 2},
        ]
        ores = {"enwiki": {"scores": {"1": {"damaging": {"score": {"probability": {"true": 0.7}}}}}}}
        tags = {"query": {"pages": [{"revisions": [{"revid": 2, "tags": ["mw-reverted"]}]}]}}
        src, _ = live([("nonautomated_edits", {"nonautomated_edits": rows}), ("ores", ores), ("api.php", tags)])
        edits = src.fetch_latest_edits("Me", 3)
        assert [e.page for e in edits] == [PageRef("Foo", 1), PageRef("Foo bar", 0)]
        assert edits[0].reverted and edits[0].minor
        assert edits[1].ores_damaging_prob == 0.7 and edits[1].ores_goodfaith_prob is None

    def test_unknown_editor(self):
        src, _ = live([])
        with pytest.raises(UnknownEditor):
            src.fetch_latest_edits("Ghost", 5)

    def test_admin_score_cached_per_editor(self):
        src, web = live([("adminscore", {"total": 812.5})])
        a = src.fetch_admin_score("Me")
        b = src.fetch_admin_score("Me")
        assert a == b and a.score == 812.5 and a.fetched_at == 42
        assert len(web.seen) == 1

    def test_missing_user_page(self):
        src, _ = live([("api.php", {"error": {"code": "missingtitle"}})])
        assert src.fetch_user_page_text("Me") == ""

    def test_page_revisions_skip_hidden(self):
        revs = [
            {"user": "A", "timestamp": "2020-01-01T00:00:00Z"},
            {"userhidden": True, "timestamp": "2020-01-02T00:00:00Z"},
            {"user": "B", "timestamp": "2020-01-03T00:00:00Z"},
        ]
        src, _ = live([("api.php", {"query": {"pages": [{"revisions": revs}]}})])
        assert [u for u, _ in src.fetch_page_revisions(PageRef("X", 0), 5)] == ["B", "A"]

    def test_missing_page(self):
        src, _ = live([("api.php", {"query": {"pages": [{"missing": True}]}})])
        with pytest.raises(UnknownPage):
            src.fetch_page_revisions(PageRef("X", 0), 5)

    def test_top_pages(self):
        data = {"top_edits": [
            {"page_title": "Wikipedia:Village_pump", "namespace": 4, "count": 3},
            {"page_title": "Wikipedia:Help_desk", "namespace": 4, "count": 3},
        ]}
        src, _ = live([("top_edits", data)])
        assert src.fetch_top_pages("Me", 4, 5) == [(PageRef("Help desk", 4), 3), (PageRef("Village pump", 4), 3)]


def test_recording_source_replays(mini_source, tmp_path):
    rec = RecordingSource(mini_source, mini_source.missing_list())
    edits = rec.fetch_latest_edits("E1", 10)
    rec.fetch_top_pages("E1", 0, 3)
    for page, _ in rec.fetch_top_pages("E1", 0, 3):
        rec.fetch_page_revisions(page, 5)
    rec.fetch_admin_score("E1")
    rec.fetch_editor_summary("E1")
    for entry in rec.missing_list():
        rec.fetch_editor_summary(entry.editor)
        rec.fetch_top_pages(entry.editor, 0, 3)
    rec.fetch_page_revisions(PageRef("M2 page", 0), 5)
    rec.fetch_page_revisions(PageRef("P1", 0), 10)
    bundle = rec.bundle(snapshot_at=5)
    bundle.write(tmp_path / "rec")
    replay = FixtureSource.from_dir(tmp_path / "rec")
    assert replay.fetch_latest_edits("E1", 10) == edits
    assert replay.fetch_admin_score("E1").score == pytest.approx(734.38)
