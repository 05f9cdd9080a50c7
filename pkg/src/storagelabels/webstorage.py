"""Labeled localStorage and IndexedDB object stores."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable

from .cookies import ABSENT, Denial, ReadResult, ReadStatus, WriteOutcome
from .domains import (
    EMPTY_LABEL,
    AccessMode,
    Decision,
    Domain,
    FastEnum,
    Label,
    Party,
    decide_access,
    format_domain_set,
)


class StoreKind(FastEnum):
    LOCAL = "local"
    IDB = "idb"


class StorageKeyError(KeyError):
    """Label update on a key that does not exist."""


@dataclass(frozen=True, slots=True)
class StorageRecord:
    key: str
    value: str
    owner: Domain
    label: Label = EMPTY_LABEL


@dataclass
class StoragePartition:
    host: Domain
    kind: StoreKind = StoreKind.LOCAL
    db_name: str | None = None
    store_name: str | None = None
    party: Party = Party.REGISTRABLE
    enforce: bool = True
    records: dict[str, StorageRecord] = field(default_factory=dict)

    def __post_init__(self):
        scoped = self.db_name is not None and self.store_name is not None
        if (self.kind is StoreKind.IDB) != scoped:
            raise ValueError("an IndexedDB partition needs db_name and store_name, localStorage neither")

    def set_item(self, script: Domain, key: str, value: str) -> WriteOutcome:
        if not key:
            raise ValueError("storage key must be non-empty")
        current = self.records.get(key)
        if current is None:
            self.records[key] = StorageRecord(key, value, script)
            return WriteOutcome(True, self._decide(EMPTY_LABEL, script, script, AccessMode.WRITE))
        decision = self._decide(current.label, current.owner, script, AccessMode.WRITE)
        denial = None if decision.allowed else Denial(script, key, AccessMode.WRITE)
        if denial and self.enforce:
            return WriteOutcome(False, decision, denial)
        self.records[key] = replace(current, value=value)
        return WriteOutcome(True, decision, denial)

    def get_item(self, script: Domain, key: str) -> ReadResult:
        record = self.records.get(key)
        if record is None:
            return ABSENT
        decision = self._decide(record.label, record.owner, script, AccessMode.READ)
        if decision.allowed or not self.enforce:
            return ReadResult(ReadStatus.VALUE, record.value, decision)
        return ReadResult(ReadStatus.DENIED, None, decision)

    def set_readers(self, script: Domain, key: str, domains: Iterable[Domain]) -> WriteOutcome:
        return self._relabel(script, key, lambda label: label.with_readers(domains))

    def set_writers(self, script: Domain, key: str, domains: Iterable[Domain]) -> WriteOutcome:
        return self._relabel(script, key, lambda label: label.with_writers(domains))

    def _relabel(self, script: Domain, key: str, update) -> WriteOutcome:
        record = self.records.get(key)
        if record is None:
            raise StorageKeyError(key)
        # label control belongs to the owner and the host page only, even on legacy engines
        decision = self._decide(EMPTY_LABEL, record.owner, script, AccessMode.WRITE)
        if not decision.allowed:
            return WriteOutcome(False, decision, Denial(script, key, AccessMode.WRITE))
        self.records[key] = replace(record, label=update(record.label))
        return WriteOutcome(True, decision)

    def idb_put(self, script: Domain, key: str, value: str) -> WriteOutcome:
        self._require_idb()
        return self.set_item(script, key, value)

    def idb_get(self, script: Domain, key: str) -> ReadResult:
        self._require_idb()
        return self.get_item(script, key)

    def _require_idb(self) -> None:
        if self.kind is not StoreKind.IDB:
            raise TypeError("IndexedDB operation on a localStorage partition")

    def _decide(self, label: Label, owner: Domain, script: Domain, mode: AccessMode) -> Decision:
        return decide_access(label, owner, self.host, script, mode, self.party)

    def dump(self) -> list[str]:
        """One tab-separated line per record, label members sorted."""
        scope = f"{self.db_name}/{self.store_name}" if self.kind is StoreKind.IDB else ""
        return [
            "\t".join([
                self.kind.value,
                self.host.raw_host,
                scope,
                r.key,
                r.owner.raw_host,
                f"Reader={format_domain_set(r.label.readers)}",
                f"Writer={format_domain_set(r.label.writers)}",
                r.value,
            ])
            for r in self.records.values()
        ]


@dataclass
class WebStorage:
    """All localStorage and IndexedDB partitions of one browser profile."""

    party: Party = Party.REGISTRABLE
    enforce: bool = True
    partitions: dict[tuple, StoragePartition] = field(default_factory=dict)

    def local(self, host: Domain) -> StoragePartition:
        return self._get(host, StoreKind.LOCAL, None, None)

    def idb(self, host: Domain, db_name: str, store_name: str) -> StoragePartition:
        return self._get(host, StoreKind.IDB, db_name, store_name)

    def _get(self, host: Domain, kind: StoreKind, db: str | None, store: str | None) -> StoragePartition:
        ident = (host.key(self.party), kind, db, store)
        part = self.partitions.get(ident)
        if part is None:
            part = StoragePartition(host, kind, db, store, self.party, self.enforce)
            self.partitions[ident] = part
        return part

    def dump(self) -> list[str]:
        lines = []
        for part in self.partitions.values():
            lines.extend(part.dump())
        return lines

