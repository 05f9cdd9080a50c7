"""Synthetic access logs: scripted scenarios and random logs for testing."""

from __future__ import annotations

import json
import random
from typing import Iterator

from .domains import PublicSuffixList, default_suffix_list
from .eventlog import AccessEvent, event_from_record

THIRTY_DAYS = 30 * 86400

# (host accesses, third-party accesses) per storage kind and mode
TABLE2_COUNTS = {
    ("cookie", "read"): (282449, 2136907),
    ("cookie", "write"): (102576, 1271022),
    ("localstorage", "read"): (43938, 226733),
    ("localstorage", "write"): (4154, 258735),
    ("indexeddb", "read"): (167, 136),
    ("indexeddb", "write"): (1798, 5042),
}
_TABLE2_API = {
    ("cookie", "read"): "GetCookie",
    ("cookie", "write"): "SetCookie",
    ("localstorage", "read"): "GetItem",
    ("localstorage", "write"): "SetItem",
    ("indexeddb", "read"): "IdbGet",
    ("indexeddb", "write"): "IdbPut",
}


def _events(records: list[dict], suffixes: PublicSuffixList | None = None) -> list[AccessEvent]:
    suffixes = suffixes or default_suffix_list()
    return [event_from_record(r, suffixes) for r in records]


def listings_records(site: str = "example") -> list[dict]:
    """fp.com stores consent and a click counter; ad_net.com reads both and flips consent."""
    fp = "https://fp.com/fp.js"
    bad = "https://ad_net.com/bad.js"
    base = {"site": site, "host": "https://fp.com/"}
    return [
        {**base, "seq": 1, "api": "SetCookie", "script": fp, "key": "__consent", "value": "false",
         "attrs": f"Max-Age={THIRTY_DAYS}"},
        {**base, "seq": 2, "api": "GetItem", "script": fp, "key": "clickcount"},
        {**base, "seq": 3, "api": "SetItem", "script": fp, "key": "clickcount", "value": "1"},
        {**base, "seq": 4, "api": "GetCookie", "script": bad, "key": "__consent"},
        {**base, "seq": 5, "api": "SetCookie", "script": bad, "key": "__consent", "value": "true",
         "attrs": f"Max-Age={THIRTY_DAYS}"},
        {**base, "seq": 6, "api": "GetItem", "script": bad, "key": "clickcount"},
    ]


def listings_scenario() -> list[AccessEvent]:
    return _events(listings_records())


def cmp_records(site: str = "cmp-site") -> list[dict]:
    """Host sets a OneTrust consent cookie over HTTP; the CMP script then reads it."""
    base = {"site": site, "host": "https://www.fp.com/"}
    return [
        {**base, "seq": 1, "api": "HttpSetCookie", "script": "https://www.fp.com/", "key": "OptanonConsent",
         "value": "isGpcEnabled=0&groups=C0001:1"},
        {**base, "seq": 2, "api": "GetCookie", "script": "https://www.fp.com/app.js", "key": "OptanonConsent"},
        {**base, "seq": 3, "api": "GetCookie", "script": "https://cdn.onetrust.com/scripttemplates/otSDKStub.js",
         "key": "OptanonConsent"},
    ]


def table2_lines(sites: int = 97) -> Iterator[str]:
    """JSON log lines whose host/third-party split reproduces the published Table 2 counts."""
    seq = 0
    for (kind, mode), (host_n, tp_n) in TABLE2_COUNTS.items():
        api = _TABLE2_API[(kind, mode)]
        idb = ',"db":"db","store":"s"' if kind == "indexeddb" else ""
        value = ',"value":"1"' if mode == "write" else ""
        for party, count in (("h", host_n), ("t", tp_n)):
            for i in range(count):
                seq += 1
                site = i % sites
                script = f"site{site}.com" if party == "h" else f"cdn{i % 7}.tracker{i % 13}.net"
                yield (f'{{"seq":{seq},"api":"{api}","site":"s{site}","host":"site{site}.com",'
                       f'"script":"{script}","key":"k{i % 5}"{value}{idb}}}')


_HOSTS = ["fp.com", "shop.example.co.uk", "news.org"]
_THIRD = ["cmp.com", "tracker.com", "ad_net.com", "analytics.com", "securepubads.g.doubleclick.net",
          "connect.facebook.net"]


def random_records(rng: random.Random, max_sites: int = 10, max_events: int = 200,
                   label_ops: bool = False, http: bool = False) -> list[dict]:
    """A random but well-formed log. With ``label_ops``, SetReaders/SetWriters target existing keys."""
    n_sites = rng.randint(1, max_sites)
    n_events = rng.randint(0, max_events)
    site_hosts = {f"site{i}": rng.choice(_HOSTS) for i in range(n_sites)}
    keys = ["a", "b", "c", "d"]
    created: dict[tuple, bool] = {}
    apis = ["GetCookie", "SetCookie", "GetItem", "SetItem", "IdbGet", "IdbPut"]
    if label_ops:
        apis += ["SetReaders", "SetWriters"]
    if http:
        apis.append("HttpSetCookie")
    records = []
    for seq in range(1, n_events + 1):
        site = rng.choice(list(site_hosts))
        host = site_hosts[site]
        script_host = rng.choice([host, f"cdn.{host}", *_THIRD])
        api = rng.choice(apis)
        key = rng.choice(keys)
        db = rng.choice(["db1", "db2"]) if api.startswith("Idb") else None
        if api in ("SetReaders", "SetWriters"):
            candidates = [obj for obj in created if obj[0] == site and obj[1] != "cookie"]
            if candidates:
                _, _, db, key = rng.choice(candidates)
            else:
                api = "GetItem"
        kind = "cookie" if "Cookie" in api else ("idb" if db else "local")
        rec = {"seq": seq, "api": api, "site": site, "host": f"https://{host}/",
               "script": f"https://{script_host}/s.js", "key": key}
        if db:
            rec["db"], rec["store"] = db, "s1"
        if api == "HttpSetCookie":
            rec["script"] = f"https://{host}/"
        if api in ("SetReaders", "SetWriters"):
            rec["domains"] = rng.sample(_THIRD + [host], rng.randint(0, 3))
        if api in ("SetCookie", "SetItem", "IdbPut", "HttpSetCookie"):
            rec["value"] = str(rng.randint(0, 999))
            created[(site, kind, db, key)] = True
        if api in ("SetCookie", "HttpSetCookie"):
            attrs = []
            if rng.random() < 0.4:
                attrs.append("Reader={" + ",".join(rng.sample(_THIRD, rng.randint(0, 2))) + "}")
            if rng.random() < 0.4:
                attrs.append("Writer={" + ",".join(rng.sample(_THIRD, rng.randint(0, 2))) + "}")
            if rng.random() < 0.3:
                attrs.append("SameSite=" + rng.choice(["Strict", "Lax", "None"]))
            if attrs:
                rec["attrs"] = "; ".join(attrs)
        records.append(rec)
    return records


def random_log(rng: random.Random, **kwargs) -> list[AccessEvent]:
    return _events(random_records(rng, **kwargs))


def throughput_lines(n: int, seed: int = 0, sites: int = 5000) -> Iterator[str]:
    rng = random.Random(seed)
    apis = ["GetCookie", "SetCookie", "GetItem", "SetItem", "IdbGet", "IdbPut"]
    for seq in range(1, n + 1):
        site = rng.randrange(sites)
        api = apis[rng.randrange(6)]
        third = rng.random() < 0.85
        script = f"https://cdn{rng.randrange(40)}.third{rng.randrange(300)}.com/t.js" if third \
            else f"https://site{site}.com/app.js"
        rec = {"seq": seq, "api": api, "site": f"s{site}", "host": f"https://site{site}.com/",
               "script": script, "key": f"k{rng.randrange(20)}"}
        if api.startswith("Set") or api == "IdbPut":
            rec["value"] = str(seq)
        if api.startswith("Idb"):
            rec["db"], rec["store"] = "db", "s"
        yield json.dumps(rec, separators=(",", ":"))
