"""Labeled cookie jar.

Set-Cookie headers (and ``document.cookie`` assignments) accept two extra
attributes, ``Reader={a.com,b.com}`` and ``Writer={...}``. Script writes are
checked against the existing record's label, script reads silently drop
cookies the caller may not see.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from email.utils import formatdate, parsedate_to_datetime

from .domains import (
    EMPTY_LABEL,
    HTTP_ONLY_DENY,
    AccessMode,
    Decision,
    Domain,
    FastEnum,
    Label,
    Party,
    PublicSuffixList,
    decide_access,
    format_domain_set,
    normalize_domain,
)

_TOKEN_RE = re.compile(r"^[!#$%&'*+\-.^_`|~0-9A-Za-z]+$")


class CookieSyntaxError(ValueError):
    """Malformed Set-Cookie header or cookie assignment."""

    def __init__(self, attribute: str, message: str):
        super().__init__(f"{attribute}: {message}")
        self.attribute = attribute


class SameSite(FastEnum):
    STRICT = "Strict"
    LAX = "Lax"
    NONE = "None"
    UNSET = "Unset"


@dataclass(frozen=True, slots=True)
class CookieRecord:
    name: str
    value: str
    domain: Domain
    owner: Domain
    label: Label = EMPTY_LABEL
    secure: bool = False
    http_only: bool = False
    same_site: SameSite = SameSite.UNSET
    expires_at: float | None = None
    created_at: float = 0.0

    def expired(self, now: float) -> bool:
        return self.expires_at is not None and self.expires_at <= now

    def canonical(self) -> str:
        parts = [
            f"{self.name}={self.value}",
            f"Domain={self.domain.raw_host}",
            f"Owner={self.owner.raw_host}",
            f"Reader={format_domain_set(self.label.readers)}",
            f"Writer={format_domain_set(self.label.writers)}",
        ]
        if self.secure:
            parts.append("Secure")
        if self.http_only:
            parts.append("HttpOnly")
        if self.same_site is not SameSite.UNSET:
            parts.append(f"SameSite={self.same_site.value}")
        if self.expires_at is not None:
            parts.append(f"Expires={formatdate(self.expires_at, usegmt=True)}")
        return "; ".join(parts)


@dataclass(slots=True)
class _Parsed:
    name: str
    value: str
    domain: str | None = None
    owner: str | None = None
    secure: bool = False
    http_only: bool = False
    same_site: SameSite = SameSite.UNSET
    expires: float | None = None
    max_age: int | None = None
    readers: list[str] | None = None
    writers: list[str] | None = None

    def expires_at(self, now: float) -> float | None:
        if self.max_age is not None:
            return now + self.max_age if self.max_age > 0 else now
        return self.expires


def _parse_domain_set(attribute: str, raw: str) -> list[str]:
    text = raw.strip()
    if not (text.startswith("{") and text.endswith("}")) or text.count("{") != 1 or text.count("}") != 1:
        raise CookieSyntaxError(attribute, f"unbalanced braces in {raw!r}")
    inner = text[1:-1].strip()
    if not inner:
        return []
    items = [item.strip() for item in inner.split(",")]
    if any(not item for item in items):
        raise CookieSyntaxError(attribute, f"empty domain in {raw!r}")
    return items


def _parse(header: str) -> _Parsed:
    pieces = header.split(";")
    pair = pieces[0]
    if "=" not in pair:
        raise CookieSyntaxError("name-value", f"missing '=' in {pair.strip()!r}")
    name, value = (s.strip() for s in pair.split("=", 1))
    if not _TOKEN_RE.match(name):
        raise CookieSyntaxError("name", f"{name!r} is not a cookie token")
    parsed = _Parsed(name=name, value=value)
    for piece in pieces[1:]:
        if not piece.strip():
            continue
        attr, _, raw = piece.partition("=")
        attr = attr.strip()
        lower = attr.lower()
        raw = raw.strip()
        if lower == "reader":
            parsed.readers = _parse_domain_set("Reader", raw)
        elif lower == "writer":
            parsed.writers = _parse_domain_set("Writer", raw)
        elif lower == "domain":
            if not raw.lstrip("."):
                raise CookieSyntaxError("Domain", "empty value")
            parsed.domain = raw.lstrip(".")
        elif lower == "owner":
            if not raw:
                raise CookieSyntaxError("Owner", "empty value")
            parsed.owner = raw
        elif lower == "secure":
            parsed.secure = True
        elif lower == "httponly":
            parsed.http_only = True
        elif lower == "samesite":
            parsed.same_site = {s.value.lower(): s for s in SameSite}.get(raw.lower(), SameSite.UNSET)
        elif lower == "max-age":
            if not re.fullmatch(r"-?[0-9]+", raw):
                raise CookieSyntaxError("Max-Age", f"{raw!r} is not an integer")
            parsed.max_age = int(raw)
        elif lower == "expires":
            try:
                parsed.expires = parsedate_to_datetime(raw).timestamp()
            except (TypeError, ValueError, IndexError):
                # unparseable dates are ignored, as browsers do
                pass
        # Path and unknown attributes are accepted and dropped
    return parsed


def _to_domain(attribute: str, value: str, suffixes: PublicSuffixList | None) -> Domain:
    try:
        return normalize_domain(value, suffixes)
    except ValueError as exc:
        raise CookieSyntaxError(attribute, str(exc)) from None


def _label(parsed: _Parsed, suffixes: PublicSuffixList | None, base: Label = EMPTY_LABEL) -> Label:
    readers = base.readers
    writers = base.writers
    if parsed.readers is not None:
        readers = frozenset(_to_domain("Reader", d, suffixes) for d in parsed.readers)
    if parsed.writers is not None:
        writers = frozenset(_to_domain("Writer", d, suffixes) for d in parsed.writers)
    return Label(readers, writers)


def parse_set_cookie(header: str, origin: Domain, now: float,
                     suffixes: PublicSuffixList | None = None) -> CookieRecord:
    """Parse the value of a Set-Cookie header into a record.

    The owner and jar partition come from the ``Domain`` attribute when present,
    else from ``origin``. An ``Owner`` attribute (as emitted by
    :meth:`CookieRecord.canonical`) overrides the owner; the HTTP path is trusted.
    """
    parsed = _parse(header)
    domain = _to_domain("Domain", parsed.domain, suffixes) if parsed.domain else origin
    owner = _to_domain("Owner", parsed.owner, suffixes) if parsed.owner else domain
    return CookieRecord(
        name=parsed.name,
        value=parsed.value,
        domain=domain,
        owner=owner,
        label=_label(parsed, suffixes),
        secure=parsed.secure,
        http_only=parsed.http_only,
        same_site=parsed.same_site,
        expires_at=parsed.expires_at(now),
        created_at=now,
    )


@dataclass(frozen=True, slots=True)
class Denial:
    accessor: Domain
    name: str
    mode: AccessMode


@dataclass(frozen=True, slots=True)
class WriteOutcome:
    """Result of a script write.

    On an enforcing engine ``applied`` mirrors ``decision.allowed``. A legacy
    (non-enforcing) engine applies label-denied writes anyway and reports the
    would-be decision plus its denial detail.
    """

    applied: bool
    decision: Decision
    denial: Denial | None = None


class ReadStatus(FastEnum):
    VALUE = "value"
    ABSENT = "absent"
    DENIED = "denied"


@dataclass(frozen=True, slots=True)
class ReadResult:
    status: ReadStatus
    value: str | None = None
    decision: Decision | None = None

    def render(self) -> str:
        """What a script observes: denied and absent both read as ''."""
        return self.value if self.status is ReadStatus.VALUE else ""

    @property
    def denied(self) -> bool:
        return self.decision is not None and not self.decision.allowed


ABSENT = ReadResult(ReadStatus.ABSENT)


@dataclass
class CookieJar:
    """Host partition -> cookie name -> record, with label checks on the script path."""

    party: Party = Party.REGISTRABLE
    enforce: bool = True
    suffixes: PublicSuffixList | None = None
    partitions: dict[str, dict[str, CookieRecord]] = field(default_factory=dict)

    def partition(self, host: Domain) -> dict[str, CookieRecord]:
        return self.partitions.get(host.key(self.party), {})

    def get(self, host: Domain, name: str) -> CookieRecord | None:
        return self.partition(host).get(name)

    def records(self):
        for part in self.partitions.values():
            yield from part.values()

    def http_set_cookie(self, record: CookieRecord) -> None:
        part = self.partitions.setdefault(record.domain.key(self.party), {})
        part[record.name] = record

    def _live(self, host: Domain, name: str, now: float) -> CookieRecord | None:
        part = self.partitions.get(host.key(self.party))
        if part is None:
            return None
        record = part.get(name)
        if record is not None and record.expired(now):
            del part[name]
            return None
        return record

    def check_write(self, host: Domain, script: Domain, name: str, now: float) -> Decision | None:
        """Label decision for a script write to ``name``; None when the slot is free."""
        record = self._live(host, name, now)
        if record is None:
            return None
        if record.http_only:
            return HTTP_ONLY_DENY
        return decide_access(record.label, record.owner, host, script, AccessMode.WRITE, self.party)

    def js_set_cookie(self, host: Domain, script: Domain, assignment: str, now: float) -> WriteOutcome:
        """Apply ``document.cookie = assignment`` run by a script from ``script``."""
        parsed = _parse(assignment)
        key = host.key(self.party)
        denial = Denial(script, parsed.name, AccessMode.WRITE)
        if parsed.http_only:
            return WriteOutcome(False, HTTP_ONLY_DENY, denial)
        current = self._live(host, parsed.name, now)
        expires_at = parsed.expires_at(now)
        if current is None:
            record = CookieRecord(
                name=parsed.name,
                value=parsed.value,
                domain=host,
                owner=script,
                label=_label(parsed, self.suffixes),
                secure=parsed.secure,
                same_site=parsed.same_site,
                expires_at=expires_at,
                created_at=now,
            )
            decision = decide_access(EMPTY_LABEL, script, host, script, AccessMode.WRITE, self.party)
            self._store(key, record, now)
            return WriteOutcome(True, decision)
        if current.http_only:
            return WriteOutcome(False, HTTP_ONLY_DENY, denial)
        decision = decide_access(current.label, current.owner, host, script, AccessMode.WRITE, self.party)
        if not decision.allowed and self.enforce:
            return WriteOutcome(False, decision, denial)
        label = current.label
        if script.key(self.party) in (current.owner.key(self.party), host.key(self.party)):
            label = _label(parsed, self.suffixes, base=current.label)
        updated = replace(
            current,
            value=parsed.value,
            label=label,
            secure=parsed.secure,
            same_site=parsed.same_site,
            expires_at=expires_at,
        )
        self._store(key, updated, now)
        return WriteOutcome(True, decision, None if decision.allowed else denial)

    def _store(self, key: str, record: CookieRecord, now: float) -> None:
        part = self.partitions.setdefault(key, {})
        if record.expired(now):
            part.pop(record.name, None)
        else:
            part[record.name] = record

    def read_decision(self, record: CookieRecord, host: Domain, script: Domain) -> Decision:
        if record.http_only:
            return HTTP_ONLY_DENY
        return decide_access(record.label, record.owner, host, script, AccessMode.READ, self.party)

    def js_get_cookie(self, host: Domain, script: Domain, name: str, now: float) -> ReadResult:
        """Single-cookie view of a ``document.cookie`` read."""
        record = self._live(host, name, now)
        if record is None:
            return ABSENT
        decision = self.read_decision(record, host, script)
        if decision.allowed or (not self.enforce and not record.http_only):
            return ReadResult(ReadStatus.VALUE, record.value, decision)
        return ReadResult(ReadStatus.DENIED, None, decision)

    def js_get_cookie_string(self, host: Domain, script: Domain, now: float) -> str:
        pairs = []
        for record in self.partition(host).values():
            if record.expired(now):
                continue
            decision = self.read_decision(record, host, script)
            if decision.allowed or (not self.enforce and not record.http_only):
                pairs.append(f"{record.name}={record.value}")
        return "; ".join(pairs)

    def purge_expired(self, now: float) -> int:
        removed = 0
        for part in self.partitions.values():
            for name in [n for n, r in part.items() if r.expired(now)]:
                del part[name]
                removed += 1
        return removed
