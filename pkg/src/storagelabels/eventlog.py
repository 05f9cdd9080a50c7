"""Storage access logs: one JSON object per line.

Each record describes a single storage API call observed in a page::

    {"seq": 7, "api": "GetItem", "site": "s42", "host": "https://fp.com/",
     "script": "https://cdn.ad_net.com/bad.js", "key": "clickcount"}

See :data:`SCHEMA` for the full field reference.
"""

from __future__ import annotations

import gc
import json
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .domains import AccessMode, Domain, DomainError, FastEnum, PublicSuffixList, default_suffix_list
from .webstorage import StoreKind


class Api(FastEnum):
    GET_COOKIE = "GetCookie"
    SET_COOKIE = "SetCookie"
    GET_ITEM = "GetItem"
    SET_ITEM = "SetItem"
    IDB_GET = "IdbGet"
    IDB_PUT = "IdbPut"
    SET_READERS = "SetReaders"
    SET_WRITERS = "SetWriters"
    HTTP_SET_COOKIE = "HttpSetCookie"


class Kind(FastEnum):
    COOKIE = "cookie"
    LOCAL = "localstorage"
    IDB = "indexeddb"


READ_APIS = frozenset({Api.GET_COOKIE, Api.GET_ITEM, Api.IDB_GET})
# The six calls an instrumented browser logs; label and HTTP events are replay-only.
SCRIPT_APIS = frozenset({Api.GET_COOKIE, Api.SET_COOKIE, Api.GET_ITEM, Api.SET_ITEM, Api.IDB_GET, Api.IDB_PUT})

_API_KIND = {
    Api.GET_COOKIE: Kind.COOKIE,
    Api.SET_COOKIE: Kind.COOKIE,
    Api.HTTP_SET_COOKIE: Kind.COOKIE,
    Api.GET_ITEM: Kind.LOCAL,
    Api.SET_ITEM: Kind.LOCAL,
    Api.IDB_GET: Kind.IDB,
    Api.IDB_PUT: Kind.IDB,
}
_BY_TOKEN = {api.value: api for api in Api}
_INLINE_SCRIPTS = ("", "inline")
_INLINE_PREFIXES = ("about:", "javascript:", "data:")

SCHEMA = """\
Storage access log: UTF-8, one JSON object per line, blank lines ignored.

  seq      int     required  strictly increasing within the log
  api      string  required  GetCookie | SetCookie | GetItem | SetItem | IdbGet | IdbPut |
                             SetReaders | SetWriters | HttpSetCookie
  site     string  required  crawl page identifier; objects are scoped per site
  host     string  required  host page URL or hostname
  script   string  required  URL the calling script was loaded from; "", "inline",
                             about:, javascript: and data: mean the host page itself.
                             For HttpSetCookie, the responding server's URL or host.
  key      string  required  cookie name or storage key (non-empty)
  value    string  optional  value written (SetCookie, SetItem, IdbPut, HttpSetCookie)
  attrs    string  optional  cookie attributes after the value, e.g. "Reader={a.com}; SameSite=Lax"
  db       string  IDB only  IndexedDB database name (IdbGet, IdbPut; SetReaders/SetWriters on IDB)
  store    string  IDB only  IndexedDB object store name
  domains  array   label ops list of domains for SetReaders / SetWriters
  ts       number  optional  event time in seconds, used for cookie expiry (default 0)
"""


class LogFormatError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class LogError:
    line: int
    message: str

    def __str__(self) -> str:
        return f"line {self.line}: {self.message}"


@dataclass(slots=True)
class AccessEvent:
    """One logged storage API call. ``kind``, ``mode`` and ``object_id`` are derived."""

    seq: int
    api: Api
    site: str
    host: Domain
    script: Domain
    key: str
    value: str | None = None
    attrs: str | None = None
    db: str | None = None
    store: str | None = None
    domains: tuple[Domain, ...] = ()
    ts: float = 0.0
    kind: Kind = field(init=False, repr=False, compare=False)
    mode: AccessMode = field(init=False, repr=False, compare=False)
    object_id: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        kind = _API_KIND.get(self.api)
        if kind is None:
            kind = Kind.IDB if self.db is not None else Kind.LOCAL
        self.kind = kind
        self.mode = AccessMode.READ if self.api in READ_APIS else AccessMode.WRITE
        self.object_id = (self.site, kind.value, self.db, self.store, self.key)

    @property
    def store_kind(self) -> StoreKind:
        return StoreKind.IDB if self.kind is Kind.IDB else StoreKind.LOCAL

    @property
    def object_key(self) -> str:
        if self.db is not None:
            return f"{self.db}/{self.store}/{self.key}"
        return self.key

    def assignment(self) -> str:
        text = f"{self.key}={self.value or ''}"
        return f"{text}; {self.attrs}" if self.attrs else text

    def to_json(self) -> dict:
        rec = {
            "seq": self.seq,
            "api": self.api.value,
            "site": self.site,
            "host": self.host.raw_host,
            "script": self.script.raw_host,
            "key": self.key,
        }
        for name in ("value", "attrs", "db", "store"):
            val = getattr(self, name)
            if val is not None:
                rec[name] = val
        if self.domains:
            rec["domains"] = [d.raw_host for d in self.domains]
        if self.ts:
            rec["ts"] = self.ts
        return rec


@dataclass
class ParsedLog:
    events: list[AccessEvent] = field(default_factory=list)
    errors: list[LogError] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors


def _string(rec: dict, name: str, required: bool = True) -> str | None:
    val = rec.get(name)
    if type(val) is str:
        return val
    if val is None:
        if required:
            raise LogFormatError(f"missing field {name!r}")
        return None
    raise LogFormatError(f"field {name!r} must be a string")


_COOKIE_OR_LOCAL = frozenset({Api.GET_COOKIE, Api.SET_COOKIE, Api.HTTP_SET_COOKIE, Api.GET_ITEM, Api.SET_ITEM})
_LABEL_APIS = frozenset({Api.SET_READERS, Api.SET_WRITERS})


def _is_inline(script_raw: str) -> bool:
    try:
        return _INLINE_CACHE[script_raw]
    except KeyError:
        pass
    low = script_raw.strip().lower()
    inline = low in _INLINE_SCRIPTS or low.startswith(_INLINE_PREFIXES)
    if len(_INLINE_CACHE) < 1 << 16:
        _INLINE_CACHE[script_raw] = inline
    return inline


_INLINE_CACHE: dict[str, bool] = {}


def event_from_record(rec: dict, suffixes: PublicSuffixList) -> AccessEvent:
    if type(rec) is not dict:
        raise LogFormatError("record is not a JSON object")
    get = rec.get
    seq = get("seq")
    if type(seq) is not int:
        raise LogFormatError("missing field 'seq'" if seq is None else "field 'seq' must be an integer")
    api_raw, site, key, host_raw, script_raw = get("api"), get("site"), get("key"), get("host"), get("script")
    if not (type(api_raw) is str and type(site) is str and type(key) is str
            and type(host_raw) is str and type(script_raw) is str):
        for name in ("api", "site", "key", "host", "script"):
            _string(rec, name)
    api = _BY_TOKEN.get(api_raw)
    if api is None:
        raise LogFormatError(f"unknown api {api_raw!r}")
    if not key:
        raise LogFormatError("field 'key' must be non-empty")
    normalize = suffixes.normalize
    domains: tuple[Domain, ...] = ()
    try:
        host = normalize(host_raw)
        script = host if _is_inline(script_raw) else normalize(script_raw)
        if api in _LABEL_APIS:
            raw_domains = get("domains")
            if type(raw_domains) is not list or not all(type(d) is str for d in raw_domains):
                raise LogFormatError("field 'domains' must be a list of strings")
            domains = tuple(normalize(d) for d in raw_domains)
    except DomainError as exc:
        raise LogFormatError(str(exc)) from None
    db, store, value, attrs = get("db"), get("store"), get("value"), get("attrs")
    if not ((db is None or type(db) is str) and (store is None or type(store) is str)
            and (value is None or type(value) is str) and (attrs is None or type(attrs) is str)):
        for name in ("db", "store", "value", "attrs"):
            _string(rec, name, required=False)
    if (db is None) != (store is None):
        raise LogFormatError("'db' and 'store' must be given together")
    if db is None:
        if api is Api.IDB_GET or api is Api.IDB_PUT:
            raise LogFormatError(f"{api.value} needs 'db' and 'store'")
    elif api in _COOKIE_OR_LOCAL:
        raise LogFormatError(f"{api.value} does not take 'db'/'store'")
    ts = get("ts", 0.0)
    if type(ts) is not float:
        if type(ts) is not int:
            raise LogFormatError("field 'ts' must be a number")
        ts = float(ts)
    return AccessEvent(seq, api, site, host, script, key, value, attrs, db, store, domains, ts)


@contextmanager
def gc_paused():
    """Suspend the cyclic collector while building large acyclic structures."""
    was_enabled = gc.isenabled()
    gc.disable()
    try:
        yield
    finally:
        if was_enabled:
            gc.enable()


def iter_events(lines: Iterable[str], suffixes: PublicSuffixList | None = None,
                errors: list[LogError] | None = None) -> Iterator[AccessEvent]:
    """Yield events lazily; malformed lines go to ``errors`` (if given) and are skipped."""
    suffixes = suffixes or default_suffix_list()
    last_seq = None
    decode = _DECODER.decode
    for lineno, line in enumerate(lines, 1):
        if not line or line.isspace():
            continue
        try:
            try:
                rec = decode(line)
            except json.JSONDecodeError as exc:
                raise LogFormatError(f"invalid JSON: {exc.msg}") from None
            event = event_from_record(rec, suffixes)
            if last_seq is not None and event.seq <= last_seq:
                raise LogFormatError(f"seq {event.seq} does not increase (previous {last_seq})")
        except LogFormatError as exc:
            if errors is not None:
                errors.append(LogError(lineno, str(exc)))
            continue
        last_seq = event.seq
        yield event


def parse_event_log(lines: Iterable[str], suffixes: PublicSuffixList | None = None) -> ParsedLog:
    """Parse log lines, collecting per-line errors instead of stopping at the first."""
    out = ParsedLog()
    with gc_paused():
        out.events.extend(iter_events(lines, suffixes, out.errors))
    return out


_DECODER = json.JSONDecoder()


def dump_events(events: Iterable[AccessEvent]) -> Iterator[str]:
    for event in events:
        yield json.dumps(event.to_json(), separators=(",", ":"))
