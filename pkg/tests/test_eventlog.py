from __future__ import annotations

import json

from storagelabels.domains import AccessMode
from storagelabels.eventlog import Api, Kind, dump_events, parse_event_log

BASE = {"site": "s1", "host": "https://fp.com/", "script": "https://fp.com/a.js", "key": "k"}


def line(**fields):
    return json.dumps({**BASE, **fields})


def test_one_event():
    parsed = parse_event_log([line(seq=1, api="GetCookie")])
    assert parsed.ok and len(parsed.events) == 1
    ev = parsed.events[0]
    assert ev.api is Api.GET_COOKIE and ev.kind is Kind.COOKIE and ev.mode is AccessMode.READ
    assert ev.object_id == ("s1", "cookie", None, None, "k")


def test_script_url_normalized():
    ev = parse_event_log([line(seq=1, api="GetItem", script="https://connect.facebook.net/sdk.js")]).events[0]
    assert ev.script.registrable == "facebook.net" and ev.script.raw_host == "connect.facebook.net"


def test_inline_scripts_are_host():
    for script in ["", "inline", "about:blank", "javascript:void(0)", "data:text/javascript,1"]:
        ev = parse_event_log([line(seq=1, api="GetItem", script=script)]).events[0]
        assert ev.script == ev.host


def test_errors_collected_with_line_numbers():
    lines = [
        line(seq=1, api="GetCookie"),
        "",
        json.dumps({"seq": 2, "api": "GetCookie", "site": "s1", "host": "fp.com", "script": "fp.com"}),
        line(seq=3, api="Frobnicate"),
        "{not json",
        line(seq=3, api="IdbGet"),
        line(seq=4, api="GetItem", db="d", store="s"),
        line(seq=5, api="SetReaders"),
        line(seq=6, api="SetItem", host="bad host"),
        line(seq=0, api="GetItem"),
        line(seq=7, api="SetItem", value=5),
        line(seq=8, api="IdbPut", db="d", store="s", value="v"),
    ]
    parsed = parse_event_log(lines)
    assert [e.seq for e in parsed.events] == [1, 8]
    by_line = {e.line: e.message for e in parsed.errors}
    assert sorted(by_line) == [3, 4, 5, 6, 7, 8, 9, 10, 11]
    assert "key" in by_line[3]
    assert "unknown api" in by_line[4]
    assert "invalid JSON" in by_line[5]
    assert "needs 'db'" in by_line[6]
    assert "does not take" in by_line[7]
    assert "domains" in by_line[8]
    assert "invalid host" in by_line[9]
    assert "does not increase" in by_line[10]
    assert "'value' must be a string" in by_line[11]
    assert str(parsed.errors[0]).startswith("line 3: ")


def test_idb_object_key_and_label_op():
    parsed = parse_event_log([
        line(seq=1, api="IdbPut", db="db1", store="orders", key="cart", value="x"),
        line(seq=2, api="SetReaders", db="db1", store="orders", key="cart", domains=["a.com", "www.b.co.uk"]),
    ])
    put, label = parsed.events
    assert put.object_key == "db1/orders/cart" and put.kind is Kind.IDB
    assert label.kind is Kind.IDB and [d.registrable for d in label.domains] == ["a.com", "b.co.uk"]


def test_dump_round_trip():
    lines = [
        line(seq=1, api="SetCookie", value="v", attrs="Reader={a.com}", ts=5),
        line(seq=2, api="SetWriters", domains=["x.org"]),
    ]
    events = parse_event_log(lines).events
    assert parse_event_log(dump_events(events)).events == events
