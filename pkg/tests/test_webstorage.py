from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from storagelabels.domains import Reason
from storagelabels.webstorage import StorageKeyError, StoragePartition, StoreKind, WebStorage

from conftest import dom

FP = dom("fp.com")
AD = dom("ad_net.com")


@pytest.fixture
def local():
    part = StoragePartition(FP)
    part.set_item(FP, "clickcount", "5")
    return part


def test_set_item_creates_with_owner(local):
    rec = local.records["clickcount"]
    assert rec.owner == FP and not rec.label.readers and not rec.label.writers


def test_third_party_write_denied(local):
    out = local.set_item(AD, "clickcount", "0")
    assert not out.applied and out.decision.reason is Reason.DEFAULT_DENY
    assert local.records["clickcount"].value == "5"
    assert local.set_item(FP, "clickcount", "6").applied


def test_empty_key_rejected(local):
    with pytest.raises(ValueError):
        local.set_item(FP, "", "x")


def test_get_item_examples(local):
    assert local.get_item(FP, "clickcount").render() == "5"
    denied = local.get_item(AD, "clickcount")
    assert denied.denied and denied.decision.reason is Reason.DEFAULT_DENY
    assert denied.render() == local.get_item(AD, "missing").render() == ""
    local.set_readers(FP, "clickcount", [dom("analytics.com")])
    assert local.get_item(dom("analytics.com"), "clickcount").render() == "5"
    assert local.get_item(AD, "clickcount").denied


def test_set_readers_overwrites(local):
    local.set_readers(FP, "clickcount", [dom("a.com")])
    local.set_readers(FP, "clickcount", [dom("b.com")])
    assert local.records["clickcount"].label.readers == {dom("b.com")}
    local.set_readers(FP, "clickcount", [])
    assert not local.records["clickcount"].label.readers


def test_unauthorized_relabel(local):
    before = local.records["clickcount"]
    out = local.set_readers(AD, "clickcount", [AD])
    assert not out.applied and out.decision.reason is Reason.DEFAULT_DENY
    assert local.records["clickcount"] is before


def test_relabel_missing_key(local):
    with pytest.raises(StorageKeyError):
        local.set_writers(FP, "nope", [])


def test_set_writers_grants_and_revokes(local):
    tkr = dom("tkr.com")
    local.set_writers(FP, "clickcount", [tkr])
    assert local.set_item(tkr, "clickcount", "7").applied
    # writing does not grant reading
    assert local.get_item(tkr, "clickcount").denied
    local.set_writers(FP, "clickcount", [])
    assert not local.set_item(tkr, "clickcount", "8").applied


def test_reader_cannot_set_writers(local):
    reader = dom("analytics.com")
    local.set_readers(FP, "clickcount", [reader])
    assert not local.set_writers(reader, "clickcount", [reader]).applied


def test_host_may_relabel_third_party_object():
    part = StoragePartition(FP)
    part.set_item(AD, "tp", "1")
    assert part.records["tp"].owner == AD
    assert part.set_readers(FP, "tp", [dom("x.com")]).applied
    assert part.set_readers(AD, "tp", []).applied


def test_idb_scoping():
    ws = WebStorage()
    a, b = ws.idb(FP, "db1", "s1"), ws.idb(FP, "db2", "s1")
    assert a.idb_put(FP, "cart42", "x").applied
    assert b.idb_get(FP, "cart42").render() == ""
    assert not a.idb_put(AD, "cart42", "y").applied
    assert a.idb_get(FP, "cart42").render() == "x"
    assert a.idb_get(AD, "cart42").denied
    assert ws.local(FP).get_item(FP, "cart42").render() == ""


def test_idb_ops_need_idb_partition(local):
    with pytest.raises(TypeError):
        local.idb_put(FP, "k", "v")
    with pytest.raises(ValueError):
        StoragePartition(FP, StoreKind.IDB)


def test_dump_format():
    ws = WebStorage()
    ws.local(FP).set_item(FP, "k", "v")
    part = ws.idb(FP, "db1", "orders")
    part.idb_put(dom("cmp.com"), "cart", "3")
    part.set_readers(FP, "cart", [dom("b.com"), dom("a.com")])
    assert ws.dump() == [
        "local\tfp.com\t\tk\tfp.com\tReader={}\tWriter={}\tv",
        "idb\tfp.com\tdb1/orders\tcart\tcmp.com\tReader={a.com,b.com}\tWriter={}\t3",
    ]


# -- properties ---------------------------------------------------------------

POOL = ["fp.com", "cmp.com", "tracker.com", "ad_net.com", "analytics.com"]
scripts = st.sampled_from(POOL).map(dom)
keys = st.sampled_from(["a", "b", "c"])
domain_lists = st.lists(scripts, max_size=3)
op = st.one_of(
    st.tuples(st.just("set"), scripts, keys, st.text(max_size=3)),
    st.tuples(st.just("readers"), scripts, keys, domain_lists),
    st.tuples(st.just("writers"), scripts, keys, domain_lists),
)


def run(part, ops):
    for kind, script, key, arg in ops:
        if kind == "set":
            part.set_item(script, key, arg)
        elif key in part.records:
            (part.set_readers if kind == "readers" else part.set_writers)(script, key, arg)


@given(st.lists(op, max_size=30))
@settings(max_examples=150)
def test_owner_immutable_and_overwrite_law(ops):
    part = StoragePartition(FP)
    owners = {}
    last_readers = {}
    for kind, script, key, arg in ops:
        if kind == "set":
            part.set_item(script, key, arg)
            owners.setdefault(key, script)
        elif key in part.records:
            if kind == "readers":
                if part.set_readers(script, key, arg).applied:
                    last_readers[key] = frozenset(arg)
            else:
                part.set_writers(script, key, arg)
        if key in part.records:
            assert part.records[key].owner == owners[key]
    for key, readers in last_readers.items():
        assert part.records[key].label.readers == readers


@given(st.lists(op, max_size=20), keys, scripts, domain_lists)
def test_writer_grants_never_change_reads(ops, key, outsider, writers):
    part = StoragePartition(FP)
    run(part, ops)
    if key not in part.records:
        return
    before = part.get_item(outsider, key).status
    part.set_writers(FP, key, writers)
    assert part.get_item(outsider, key).status is before


@given(st.lists(op, max_size=20), scripts, keys)
def test_denial_opacity(ops, script, key):
    part = StoragePartition(FP)
    run(part, ops)
    got = part.get_item(script, key)
    if got.denied:
        assert got.render() == part.get_item(script, "never-set").render()


@given(st.lists(op, max_size=20), st.lists(op, max_size=20))
@settings(max_examples=100)
def test_partition_isolation(ops_a, ops_b):
    ws = WebStorage()
    run(ws.local(FP), ops_a)
    snapshot = dict(ws.local(FP).records)
    run(ws.idb(FP, "db", "s"), ops_b)
    run(ws.local(dom("other.org")), ops_b)
    assert ws.local(FP).records == snapshot
