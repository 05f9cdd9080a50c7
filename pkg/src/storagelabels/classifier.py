"""First-/third-party classification of logged storage accesses.

The creator of an object is the script behind the first logged access to it,
read or write. Every later access is put in one of five buckets depending on
whether the creator and the accessor are first party to the host page.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from operator import attrgetter
from decimal import ROUND_DOWN, ROUND_HALF_UP, Decimal
from typing import Iterable, Sequence

from .domains import AccessMode, Domain, FastEnum, Party
from .eventlog import SCRIPT_APIS, AccessEvent, Kind, gc_paused


class UndefinedRatioError(ZeroDivisionError):
    pass


class ClassificationError(RuntimeError):
    pass


class Category(FastEnum):
    FP_CREATED_FP_ACCESSED = "FpCreatedFpAccessed"
    FP_CREATED_TP_ACCESSED = "FpCreatedTpAccessed"
    TP_CREATED_FP_ACCESSED = "TpCreatedFpAccessed"
    TP_CREATED_SAME_TP_ACCESSED = "TpCreatedSameTpAccessed"
    TP_CREATED_OTHER_TP_ACCESSED = "TpCreatedOtherTpAccessed"


ROUNDING = {"half-up": ROUND_HALF_UP, "down": ROUND_DOWN}
_CENT = Decimal("0.01")


def percent(part: int, whole: int, rounding: str = "half-up") -> Decimal:
    if whole <= 0:
        raise UndefinedRatioError("percentage of an empty total is undefined")
    return (Decimal(100 * part) / Decimal(whole)).quantize(_CENT, rounding=ROUNDING[rounding])


def percent_third_party(host_count: int, tp_count: int, rounding: str = "half-up") -> Decimal:
    """Share of third-party accesses, to two decimals.

    >>> percent_third_party(5, 0)
    Decimal('0.00')
    """
    if host_count < 0 or tp_count < 0:
        raise ValueError("access counts must be non-negative")
    return percent(tp_count, host_count + tp_count, rounding)


def classifiable(event: AccessEvent) -> bool:
    return event.api in SCRIPT_APIS


def attribute_creators(events: Iterable[AccessEvent]) -> dict[tuple, Domain]:
    creators: dict[tuple, Domain] = {}
    for event in events:
        if event.api in SCRIPT_APIS:
            creators.setdefault(event.object_id, event.script)
    return creators


def categorize(creator: Domain, accessor: Domain, host: Domain, party: Party = Party.REGISTRABLE) -> Category:
    host_key = host.key(party)
    creator_key = creator.key(party)
    accessor_key = accessor.key(party)
    if creator_key == host_key:
        if accessor_key == host_key:
            return Category.FP_CREATED_FP_ACCESSED
        return Category.FP_CREATED_TP_ACCESSED
    if accessor_key == host_key:
        return Category.TP_CREATED_FP_ACCESSED
    if accessor_key == creator_key:
        return Category.TP_CREATED_SAME_TP_ACCESSED
    return Category.TP_CREATED_OTHER_TP_ACCESSED


def classify(events: Sequence[AccessEvent], creators: dict[tuple, Domain],
             party: Party = Party.REGISTRABLE) -> list[Category | None]:
    """Category per event, aligned with ``events``; None for label and HTTP events."""
    key = attrgetter("registrable" if party is Party.REGISTRABLE else "raw_host")
    out: list[Category | None] = []
    append = out.append
    for event in events:
        if event.api not in SCRIPT_APIS:
            append(None)
            continue
        creator = creators.get(event.object_id)
        if creator is None:
            raise ClassificationError(f"event seq {event.seq}: object {event.object_key!r} has no creator")
        host_key = key(event.host)
        accessor_key = key(event.script)
        creator_key = key(creator)
        if creator_key == host_key:
            append(FP_FP if accessor_key == host_key else FP_TP)
        elif accessor_key == host_key:
            append(TP_FP)
        else:
            append(TP_SAME if accessor_key == creator_key else TP_OTHER)
    return out


FP_FP = Category.FP_CREATED_FP_ACCESSED
FP_TP = Category.FP_CREATED_TP_ACCESSED
TP_FP = Category.TP_CREATED_FP_ACCESSED
TP_SAME = Category.TP_CREATED_SAME_TP_ACCESSED
TP_OTHER = Category.TP_CREATED_OTHER_TP_ACCESSED


@dataclass
class Cell:
    websites: int = 0
    objects: int = 0
    accesses: int = 0

    def as_dict(self) -> dict:
        return {"websites": self.websites, "objects": self.objects, "accesses": self.accesses}


@dataclass
class ClassificationReport:
    cells: dict[tuple[Kind, Category, AccessMode], Cell] = field(default_factory=dict)
    host_accesses: dict[tuple[Kind, AccessMode], int] = field(default_factory=dict)
    third_party_accesses: dict[tuple[Kind, AccessMode], int] = field(default_factory=dict)
    rounding: str = "half-up"

    def cell(self, kind: Kind, category: Category, mode: AccessMode) -> Cell:
        return self.cells.get((kind, category, mode), Cell())

    def total(self, kind: Kind) -> int:
        return sum(c.accesses for (k, _, _), c in self.cells.items() if k is kind)

    def third_party_percent(self, kind: Kind, mode: AccessMode | None = None) -> Decimal | None:
        modes = [mode] if mode else list(AccessMode)
        host = sum(self.host_accesses.get((kind, m), 0) for m in modes)
        tp = sum(self.third_party_accesses.get((kind, m), 0) for m in modes)
        if host + tp == 0:
            return None
        return percent_third_party(host, tp, self.rounding)

    def rows(self) -> list[tuple[str, str, str, int, int, int]]:
        rows = []
        for kind in Kind:
            for category in Category:
                for mode in AccessMode:
                    c = self.cell(kind, category, mode)
                    rows.append((kind.value, category.value, mode.value, c.websites, c.objects, c.accesses))
        return rows

    def percent_rows(self) -> list[tuple[str, str, int, int, str]]:
        rows = []
        for kind in Kind:
            for mode in [*AccessMode, None]:
                modes = [mode] if mode else list(AccessMode)
                host = sum(self.host_accesses.get((kind, m), 0) for m in modes)
                tp = sum(self.third_party_accesses.get((kind, m), 0) for m in modes)
                pct = self.third_party_percent(kind, mode)
                rows.append((kind.value, mode.value if mode else "all", host, tp, "n/a" if pct is None else str(pct)))
        return rows

    def to_json(self) -> dict:
        return {
            "cells": [
                {"kind": k, "category": cat, "mode": m, "websites": w, "objects": o, "accesses": a}
                for k, cat, m, w, o, a in self.rows()
            ],
            "third_party": [
                {"kind": k, "mode": m, "host_accesses": h, "third_party_accesses": t,
                 "percent": None if p == "n/a" else float(p)}
                for k, m, h, t, p in self.percent_rows()
            ],
        }

    def to_tsv(self) -> str:
        lines = ["kind\tcategory\tmode\twebsites\tobjects\taccesses"]
        lines += ["\t".join(map(str, row)) for row in self.rows()]
        lines.append("")
        lines.append("kind\tmode\thost_accesses\tthird_party_accesses\tpercent_third_party")
        lines += ["\t".join(map(str, row)) for row in self.percent_rows()]
        return "\n".join(lines) + "\n"


def aggregate(events: Sequence[AccessEvent], categories: Sequence[Category | None],
              party: Party = Party.REGISTRABLE, rounding: str = "half-up") -> ClassificationReport:
    sites: dict[tuple, set] = {}
    objects: dict[tuple, set] = {}
    accesses: dict[tuple, int] = {}
    host_acc: dict[tuple, int] = {}
    tp_acc: dict[tuple, int] = {}
    key = attrgetter("registrable" if party is Party.REGISTRABLE else "raw_host")
    for event, category in zip(events, categories, strict=True):
        if category is None:
            continue
        kind = event.kind
        mode = event.mode
        cell = (kind, category, mode)
        if cell in accesses:
            accesses[cell] += 1
            sites[cell].add(event.site)
            objects[cell].add(event.object_id)
        else:
            accesses[cell] = 1
            sites[cell] = {event.site}
            objects[cell] = {event.object_id}
        split = host_acc if key(event.script) == key(event.host) else tp_acc
        split[kind, mode] = split.get((kind, mode), 0) + 1
    cells = {c: Cell(len(sites[c]), len(objects[c]), accesses[c]) for c in accesses}
    return ClassificationReport(cells, host_acc, tp_acc, rounding)


def classify_log(events: Iterable[AccessEvent], party: Party = Party.REGISTRABLE,
                 rounding: str = "half-up") -> ClassificationReport:
    """Single-pass equivalent of ``aggregate(classify(attribute_creators(...)))``.

    Accepts any iterable, so a log can be streamed without holding every event.
    """
    key = attrgetter("registrable" if party is Party.REGISTRABLE else "raw_host")
    creators: dict[tuple, str] = {}
    sites: dict[tuple, set] = {}
    objects: dict[tuple, set] = {}
    accesses: dict[tuple, int] = {}
    host_acc: dict[tuple, int] = {}
    tp_acc: dict[tuple, int] = {}
    with gc_paused():
        for event in events:
            if event.api not in SCRIPT_APIS:
                continue
            obj = event.object_id
            host_key = key(event.host)
            accessor_key = key(event.script)
            creator_key = creators.setdefault(obj, accessor_key)
            if creator_key == host_key:
                category = FP_FP if accessor_key == host_key else FP_TP
            elif accessor_key == host_key:
                category = TP_FP
            else:
                category = TP_SAME if accessor_key == creator_key else TP_OTHER
            kind = event.kind
            mode = event.mode
            cell = (kind, category, mode)
            if cell in accesses:
                accesses[cell] += 1
                sites[cell].add(event.site)
                objects[cell].add(obj)
            else:
                accesses[cell] = 1
                sites[cell] = {event.site}
                objects[cell] = {obj}
            split = host_acc if accessor_key == host_key else tp_acc
            split[kind, mode] = split.get((kind, mode), 0) + 1
    cells = {c: Cell(len(sites[c]), len(objects[c]), accesses[c]) for c in accesses}
    return ClassificationReport(cells, host_acc, tp_acc, rounding)
