"""Replay access logs against labeled engines and report what would break."""

from __future__ import annotations

import ipaddress
from collections import Counter
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path
from typing import Iterable, Sequence

from .classifier import UndefinedRatioError, percent
from .cookies import CookieJar, CookieSyntaxError, ReadResult, WriteOutcome, parse_set_cookie
from .domains import AccessMode, Domain, FastEnum, Party, Reason
from .eventlog import SCRIPT_APIS, AccessEvent, Api, gc_paused
from .webstorage import StorageKeyError, WebStorage


class ReplayMode(FastEnum):
    OBSERVE = "observe"
    ENFORCE = "enforce"


class ReplayError(RuntimeError):
    def __init__(self, seq: int, message: str):
        super().__init__(f"seq {seq}: {message}")
        self.seq = seq


@dataclass(frozen=True, slots=True)
class DenialEvent:
    event_seq: int
    site_id: str
    accessor: Domain
    object_key: str
    mode: AccessMode
    reason: Reason

    def to_json(self) -> dict:
        return {
            "seq": self.event_seq,
            "site": self.site_id,
            "accessor": self.accessor.raw_host,
            "script_domain": self.accessor.registrable,
            "object": self.object_key,
            "mode": self.mode.value,
            "reason": self.reason.value,
        }


@dataclass
class SiteState:
    jar: CookieJar
    storage: WebStorage


@dataclass
class ReplayResult:
    mode: ReplayMode
    sites: dict[str, SiteState] = field(default_factory=dict)
    denials: list[DenialEvent] = field(default_factory=list)


def _denial(event: AccessEvent, mode: AccessMode, reason: Reason) -> DenialEvent:
    return DenialEvent(event.seq, event.site, event.script, event.object_key, mode, reason)


def replay(events: Iterable[AccessEvent], mode: ReplayMode = ReplayMode.ENFORCE,
           party: Party = Party.REGISTRABLE) -> ReplayResult:
    """Feed events through per-site engines, collecting (would-be) denials.

    Observe mode uses legacy engines: denials are recorded but the access still
    takes effect, as in an unmodified browser.
    """
    enforce = mode is ReplayMode.ENFORCE
    result = ReplayResult(mode)
    sites = result.sites
    denials = result.denials
    with gc_paused():
        for event in events:
            state = sites.get(event.site)
            if state is None:
                state = sites[event.site] = SiteState(CookieJar(party, enforce), WebStorage(party, enforce))
            try:
                outcome = _apply(state, event)
            except (CookieSyntaxError, StorageKeyError, ValueError, TypeError) as exc:
                raise ReplayError(event.seq, f"{event.api.value} {event.object_key!r}: {exc}") from None
            if outcome is None:
                continue
            if isinstance(outcome, WriteOutcome):
                if outcome.denial is not None:
                    denials.append(_denial(event, AccessMode.WRITE, outcome.decision.reason))
            elif outcome.denied:
                denials.append(_denial(event, AccessMode.READ, outcome.decision.reason))
    return result


def _apply(state: SiteState, event: AccessEvent) -> WriteOutcome | ReadResult | None:
    api = event.api
    if api is Api.GET_COOKIE:
        return state.jar.js_get_cookie(event.host, event.script, event.key, event.ts)
    if api is Api.SET_COOKIE:
        return state.jar.js_set_cookie(event.host, event.script, event.assignment(), event.ts)
    if api is Api.HTTP_SET_COOKIE:
        state.jar.http_set_cookie(parse_set_cookie(event.assignment(), event.script, event.ts))
        return None
    if api is Api.GET_ITEM:
        return state.storage.local(event.host).get_item(event.script, event.key)
    if api is Api.SET_ITEM:
        return state.storage.local(event.host).set_item(event.script, event.key, event.value or "")
    if api is Api.IDB_GET:
        return state.storage.idb(event.host, event.db, event.store).idb_get(event.script, event.key)
    if api is Api.IDB_PUT:
        return state.storage.idb(event.host, event.db, event.store).idb_put(event.script, event.key, event.value or "")
    part = state.storage.idb(event.host, event.db, event.store) if event.db is not None else state.storage.local(event.host)
    if api is Api.SET_READERS:
        return part.set_readers(event.script, event.key, event.domains)
    return part.set_writers(event.script, event.key, event.domains)


@dataclass
class SiteBreakage:
    denied_reads: int = 0
    denied_writes: int = 0
    scripts: set[str] = field(default_factory=set)
    objects: set[str] = field(default_factory=set)

    @property
    def total(self) -> int:
        return self.denied_reads + self.denied_writes


@dataclass
class BreakageReport:
    sites: dict[str, SiteBreakage] = field(default_factory=dict)
    top_scripts: list[tuple[str, int]] = field(default_factory=list)
    coverage: Decimal | None = None

    @property
    def denied_reads(self) -> int:
        return sum(s.denied_reads for s in self.sites.values())

    @property
    def denied_writes(self) -> int:
        return sum(s.denied_writes for s in self.sites.values())

    @property
    def total(self) -> int:
        return self.denied_reads + self.denied_writes

    def site_rows(self) -> list[tuple[str, int, int, int, int]]:
        return [
            (site, s.denied_reads, s.denied_writes, len(s.scripts), len(s.objects))
            for site, s in sorted(self.sites.items())
        ]

    def to_json(self) -> dict:
        doc = {
            "totals": {"denied_reads": self.denied_reads, "denied_writes": self.denied_writes,
                       "sites": len(self.sites)},
            "sites": [
                {"site": site, "denied_reads": r, "denied_writes": w, "denied_scripts": ns, "affected_objects": no}
                for site, r, w, ns, no in self.site_rows()
            ],
            "top_scripts": [{"script_domain": d, "denials": n} for d, n in self.top_scripts],
        }
        if self.coverage is not None:
            doc["blocklist_coverage"] = float(self.coverage)
        return doc

    def to_tsv(self) -> str:
        lines = ["site\tdenied_reads\tdenied_writes\tdenied_scripts\taffected_objects"]
        lines += ["\t".join(map(str, row)) for row in self.site_rows()]
        lines.append(f"TOTAL\t{self.denied_reads}\t{self.denied_writes}\t\t")
        lines.append("")
        lines.append("rank\tscript_domain\tdenials")
        lines += [f"{i}\t{d}\t{n}" for i, (d, n) in enumerate(self.top_scripts, 1)]
        if self.coverage is not None:
            lines.append("")
            lines.append(f"blocklist_coverage\t{self.coverage}")
        return "\n".join(lines) + "\n"


def breakage_report(denials: Iterable[DenialEvent], top_n: int = 20) -> BreakageReport:
    if top_n < 1:
        raise ValueError("top_n must be at least 1")
    report = BreakageReport()
    counts: Counter[str] = Counter()
    for d in denials:
        site = report.sites.get(d.site_id)
        if site is None:
            site = report.sites[d.site_id] = SiteBreakage()
        if d.mode is AccessMode.READ:
            site.denied_reads += 1
        else:
            site.denied_writes += 1
        site.scripts.add(d.accessor.registrable)
        site.objects.add(d.object_key)
        counts[d.accessor.registrable] += 1
    report.top_scripts = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:top_n]
    return report


def denials_tsv(denials: Sequence[DenialEvent]) -> str:
    lines = ["seq\tsite\taccessor\tobject\tmode\treason"]
    lines += [
        f"{d.event_seq}\t{d.site_id}\t{d.accessor.raw_host}\t{d.object_key}\t{d.mode.value}\t{d.reason.value}"
        for d in denials
    ]
    return "\n".join(lines) + "\n"


def parse_blocklist(lines: Iterable[str]) -> frozenset[str]:
    """Plain domain list; ``#`` comments and hosts-file ``0.0.0.0 domain`` lines allowed."""
    entries = set()
    for line in lines:
        text = line.split("#", 1)[0].strip().lower()
        if not text:
            continue
        fields = text.split()
        entry = fields[1] if len(fields) > 1 and _is_address(fields[0]) else fields[0]
        entries.add(entry.lstrip("*.").rstrip("."))
    return frozenset(entries)


def _is_address(text: str) -> bool:
    try:
        ipaddress.ip_address(text)
    except ValueError:
        return False
    return True


def load_blocklist(path: str | Path) -> frozenset[str]:
    with open(path, encoding="utf-8") as fh:
        return parse_blocklist(fh)


def match_blocklist(script: Domain, entries: frozenset[str] | set[str]) -> bool:
    """True when the script host or any parent domain of it is listed."""
    host = script.raw_host
    while True:
        if host in entries:
            return True
        dot = host.find(".")
        if dot < 0:
            return script.registrable in entries
        host = host[dot + 1:]


def blocklist_coverage(events: Iterable[AccessEvent], entries: frozenset[str] | set[str],
                       party: Party = Party.REGISTRABLE) -> Decimal:
    third_party = listed = 0
    for event in events:
        if event.api not in SCRIPT_APIS or event.script.key(party) == event.host.key(party):
            continue
        third_party += 1
        if match_blocklist(event.script, entries):
            listed += 1
    if third_party == 0:
        raise UndefinedRatioError("no third-party accesses in the log")
    return percent(listed, third_party)
