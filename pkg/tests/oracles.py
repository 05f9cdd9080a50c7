"""Brute-force reference implementations the engines are checked against.

These deliberately share no code with the package beyond event parsing:
parties are compared as plain registrable-domain strings and state is kept
in ordinary dicts.
"""

from __future__ import annotations

import re
from collections import defaultdict

READS = {"GetCookie", "GetItem", "IdbGet"}
SCRIPT_APIS = READS | {"SetCookie", "SetItem", "IdbPut"}
KIND = {"GetCookie": "cookie", "SetCookie": "cookie", "GetItem": "localstorage", "SetItem": "localstorage",
        "IdbGet": "indexeddb", "IdbPut": "indexeddb"}


def recount(events):
    """Classification tables by direct counting over the raw event list."""
    first_script = {}
    rows = []
    for ev in events:
        api = ev.api.value
        if api not in SCRIPT_APIS:
            continue
        obj = (ev.site, KIND[api], ev.db, ev.store, ev.key)
        if obj not in first_script:
            first_script[obj] = ev.script.registrable
        creator = first_script[obj]
        host = ev.host.registrable
        acc = ev.script.registrable
        if creator == host:
            cat = "FpCreatedFpAccessed" if acc == host else "FpCreatedTpAccessed"
        elif acc == host:
            cat = "TpCreatedFpAccessed"
        elif acc == creator:
            cat = "TpCreatedSameTpAccessed"
        else:
            cat = "TpCreatedOtherTpAccessed"
        mode = "read" if api in READS else "write"
        rows.append((KIND[api], cat, mode, ev.site, obj, acc == host))
    table = {}
    for kind, cat, mode, site, obj, _ in rows:
        cell = table.setdefault((kind, cat, mode), [set(), set(), 0])
        cell[0].add(site)
        cell[1].add(obj)
        cell[2] += 1
    cells = {k: (len(v[0]), len(v[1]), v[2]) for k, v in table.items()}
    split = defaultdict(lambda: [0, 0])
    for kind, _, mode, _, _, first in rows:
        split[(kind, mode)][0 if first else 1] += 1
    return cells, dict(split)


def _set_of(attrs, name):
    if not attrs:
        return None
    m = re.search(name + r"=\{([^}]*)\}", attrs)
    if m is None:
        return None
    return {item.strip() for item in m.group(1).split(",") if item.strip()}


def allowed_only_replay(events):
    """Enforce-mode final state and denied seqs, re-derived with plain dict semantics.

    Handles the event shapes produced by the random log generator: no
    expiry, no HttpOnly, label attributes listing registrable domains.
    """
    state = {}
    denied = []

    def reg(domains):
        return {d if d.count(".") == 1 else ".".join(d.split(".")[-2:]) for d in domains}

    for ev in events:
        api = ev.api.value
        host = ev.host.registrable
        acc = ev.script.registrable
        if api.endswith("Cookie"):
            obj = (ev.site, "cookie", None, None, ev.key)
        else:
            obj = (ev.site, "idb" if ev.db else "local", ev.db, ev.store, ev.key)
        rec = state.get(obj)
        if api == "HttpSetCookie":
            state[obj] = {"value": ev.value or "", "owner": acc,
                          "readers": reg(_set_of(ev.attrs, "Reader") or ()),
                          "writers": reg(_set_of(ev.attrs, "Writer") or ())}
            continue
        if api in ("SetReaders", "SetWriters"):
            if acc in (host, rec["owner"]):
                rec["readers" if api == "SetReaders" else "writers"] = {d.registrable for d in ev.domains}
            else:
                denied.append(ev.seq)
            continue
        if rec is None:
            if api not in READS:
                state[obj] = {"value": ev.value or "", "owner": acc,
                              "readers": reg(_set_of(ev.attrs, "Reader") or ()),
                              "writers": reg(_set_of(ev.attrs, "Writer") or ())}
            continue
        privileged = acc in (host, rec["owner"])
        if api in READS:
            if not (privileged or acc in rec["readers"]):
                denied.append(ev.seq)
            continue
        if not (privileged or acc in rec["writers"]):
            denied.append(ev.seq)
            continue
        rec["value"] = ev.value or ""
        if privileged and api == "SetCookie":
            for name, field in (("Reader", "readers"), ("Writer", "writers")):
                new = _set_of(ev.attrs, name)
                if new is not None:
                    rec[field] = reg(new)
    return state, denied


def engine_state(result):
    """Flatten a replay result into the oracle's state shape."""
    out = {}
    for site, st in result.sites.items():
        for rec in st.jar.records():
            out[(site, "cookie", None, None, rec.name)] = _summary(rec)
        for part in st.storage.partitions.values():
            for rec in part.records.values():
                out[(site, part.kind.value, part.db_name, part.store_name, rec.key)] = _summary(rec)
    return out


def _summary(rec):
    return {"value": rec.value, "owner": rec.owner.registrable,
            "readers": {d.registrable for d in rec.label.readers},
            "writers": {d.registrable for d in rec.label.writers}}
