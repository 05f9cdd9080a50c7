"""Domains, labels and the access decision shared by every storage engine.

A script is identified by the registrable domain (eTLD+1) of the URL it was
loaded from. Every stored object carries an owner and a :class:`Label`, a pair
of reader/writer domain sets. :func:`decide_access` is the single pure check
all engines delegate to.
"""

from __future__ import annotations

import enum
import os
import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable
from urllib.parse import urlsplit

SUFFIX_LIST_ENV = "STORAGELABELS_SUFFIX_LIST"

_LABEL_RE = re.compile(r"^[a-z0-9_](?:[a-z0-9_-]*[a-z0-9_])?$")


class DomainError(ValueError):
    """Raised when a host or URL cannot be turned into a domain."""

    def __init__(self, value: str, why: str):
        super().__init__(f"invalid host or URL {value!r}: {why}")
        self.value = value


class FastEnum(enum.Enum):
    # members are singletons compared by identity; skip Enum's Python-level __hash__
    __hash__ = object.__hash__


class Party(FastEnum):
    """Granularity used when comparing two domains."""

    REGISTRABLE = "registrable"
    EXACT_HOST = "exact-host"


class AccessMode(FastEnum):
    READ = "read"
    WRITE = "write"


class Reason(FastEnum):
    HOST_PARTY = "HostParty"
    OWNER = "Owner"
    READER_SET = "ReaderSet"
    WRITER_SET = "WriterSet"
    DEFAULT_DENY = "DefaultDeny"
    HTTP_ONLY_DENY = "HttpOnlyDeny"


_ALLOW_REASONS = frozenset({Reason.HOST_PARTY, Reason.OWNER, Reason.READER_SET, Reason.WRITER_SET})


@dataclass(frozen=True, slots=True)
class Decision:
    allowed: bool
    reason: Reason

    def __post_init__(self):
        if self.allowed != (self.reason in _ALLOW_REASONS):
            raise ValueError(f"reason {self.reason.value} inconsistent with allowed={self.allowed}")


HOST_PARTY = Decision(True, Reason.HOST_PARTY)
OWNER = Decision(True, Reason.OWNER)
READER_SET = Decision(True, Reason.READER_SET)
WRITER_SET = Decision(True, Reason.WRITER_SET)
DEFAULT_DENY = Decision(False, Reason.DEFAULT_DENY)
HTTP_ONLY_DENY = Decision(False, Reason.HTTP_ONLY_DENY)


@dataclass(frozen=True, slots=True, order=True)
class Domain:
    """A normalized host together with its registrable domain."""

    registrable: str
    raw_host: str

    def key(self, party: Party = Party.REGISTRABLE) -> str:
        return self.registrable if party is Party.REGISTRABLE else self.raw_host

    def __str__(self) -> str:
        return self.raw_host


class PublicSuffixList:
    """Public suffix rules loaded from a ``public_suffix_list.dat`` style file.

    Rules are matched per the publicsuffix.org algorithm: exception rules win,
    otherwise the longest matching rule, otherwise the implicit ``*`` rule.
    """

    def __init__(self, rules: Iterable[str]):
        self.exact: set[str] = set()
        self.wildcard: set[str] = set()
        self.exception: set[str] = set()
        for line in rules:
            rule = line.split(None, 1)[0] if line.strip() else ""
            if not rule or rule.startswith("//"):
                continue
            rule = rule.lower()
            if rule.startswith("!"):
                self.exception.add(rule[1:])
            elif rule.startswith("*."):
                self.wildcard.add(rule[2:])
            else:
                self.exact.add(rule)
        self._cache: dict[str, Domain] = {}

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> PublicSuffixList:
        with open(path, encoding="utf-8") as fh:
            return cls(fh)

    @classmethod
    def bundled(cls) -> PublicSuffixList:
        ref = resources.files("storagelabels") / "data" / "public_suffix_list.dat"
        with ref.open(encoding="utf-8") as fh:
            return cls(fh)

    def public_suffix(self, host: str) -> str:
        labels = host.split(".")
        for i in range(len(labels)):
            candidate = ".".join(labels[i:])
            if candidate in self.exception:
                return ".".join(labels[i + 1:])
            if candidate in self.exact:
                return candidate
            if i + 1 < len(labels) and ".".join(labels[i + 1:]) in self.wildcard:
                return candidate
        return labels[-1]

    def registrable(self, host: str) -> str:
        """eTLD+1 of ``host``; a host that is itself a public suffix maps to itself."""
        if _is_ip(host):
            return host
        suffix = self.public_suffix(host)
        if suffix == host:
            return host
        head = host[: -len(suffix) - 1]
        return head.rsplit(".", 1)[-1] + "." + suffix

    def normalize(self, host_or_url: str) -> Domain:
        try:
            return self._cache[host_or_url]
        except KeyError:
            pass
        host = _extract_host(host_or_url)
        domain = Domain(self.registrable(host), host)
        if len(self._cache) < 1 << 18:
            self._cache[host_or_url] = domain
        return domain


def _is_ip(host: str) -> bool:
    return ":" in host or bool(re.fullmatch(r"[0-9.]+", host))


def _extract_host(value: str) -> str:
    if not isinstance(value, str):
        raise DomainError(repr(value), "not a string")
    text = value.strip()
    if not text:
        raise DomainError(value, "empty host")
    if "://" in text or text.startswith("//"):
        parsed = urlsplit(text)
    else:
        parsed = urlsplit("//" + text)
    try:
        host = parsed.hostname
        parsed.port
    except ValueError as exc:
        raise DomainError(value, str(exc)) from None
    if not host:
        raise DomainError(value, "no host component")
    host = host.rstrip(".")
    if host.startswith("[") or ":" in host:
        return host
    labels = host.split(".")
    if not all(_LABEL_RE.match(label) for label in labels):
        raise DomainError(value, "host contains an invalid label")
    return host


@lru_cache(maxsize=None)
def _load_suffix_list(path: str | None) -> PublicSuffixList:
    if path is None:
        return PublicSuffixList.bundled()
    return PublicSuffixList.from_file(path)


def default_suffix_list() -> PublicSuffixList:
    """The bundled snapshot, or the file named by ``STORAGELABELS_SUFFIX_LIST``."""
    return _load_suffix_list(os.environ.get(SUFFIX_LIST_ENV) or None)


def load_suffix_list(path: str | Path | None) -> PublicSuffixList:
    if path is None:
        return default_suffix_list()
    return _load_suffix_list(str(path))


def normalize_domain(host_or_url: str, suffixes: PublicSuffixList | None = None) -> Domain:
    return (suffixes or default_suffix_list()).normalize(host_or_url)


def same_party(a: Domain, b: Domain, party: Party = Party.REGISTRABLE) -> bool:
    return a.key(party) == b.key(party)


@dataclass(frozen=True, slots=True)
class Label:
    """Reader and writer domain sets attached to a stored object."""

    readers: frozenset[Domain] = field(default_factory=frozenset)
    writers: frozenset[Domain] = field(default_factory=frozenset)

    @classmethod
    def of(cls, readers: Iterable[str | Domain] = (), writers: Iterable[str | Domain] = (),
           suffixes: PublicSuffixList | None = None) -> Label:
        return cls(_domains(readers, suffixes), _domains(writers, suffixes))

    def can_read(self, accessor: Domain, party: Party = Party.REGISTRABLE) -> bool:
        return _member(accessor, self.readers, party)

    def can_write(self, accessor: Domain, party: Party = Party.REGISTRABLE) -> bool:
        return _member(accessor, self.writers, party)

    def with_readers(self, readers: Iterable[Domain]) -> Label:
        return Label(frozenset(readers), self.writers)

    def with_writers(self, writers: Iterable[Domain]) -> Label:
        return Label(self.readers, frozenset(writers))


EMPTY_LABEL = Label()


def _domains(items: Iterable[str | Domain], suffixes: PublicSuffixList | None) -> frozenset[Domain]:
    return frozenset(d if isinstance(d, Domain) else normalize_domain(d, suffixes) for d in items)


def _member(accessor: Domain, domains: frozenset[Domain], party: Party) -> bool:
    if not domains:
        return False
    if accessor in domains:
        return True
    key = accessor.key(party)
    return any(d.key(party) == key for d in domains)


def format_domain_set(domains: Iterable[Domain]) -> str:
    return "{" + ",".join(sorted(d.raw_host for d in domains)) + "}"


def decide_access(label: Label, owner: Domain, host: Domain, accessor: Domain,
                  mode: AccessMode, party: Party = Party.REGISTRABLE) -> Decision:
    """Decide whether ``accessor`` may read or write an object.

    Host-page scripts and the owner always have access; anyone else needs to
    be in the reader set (reads) or writer set (writes). Writer membership
    does not grant reads.
    """
    key = accessor.key(party)
    if key == host.key(party):
        return HOST_PARTY
    if key == owner.key(party):
        return OWNER
    if mode is AccessMode.READ:
        return READER_SET if _member(accessor, label.readers, party) else DEFAULT_DENY
    return WRITER_SET if _member(accessor, label.writers, party) else DEFAULT_DENY
