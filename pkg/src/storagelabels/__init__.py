"""Least-privilege labels for browser cookies, localStorage and IndexedDB."""

from .breakage import ReplayMode, blocklist_coverage, breakage_report, match_blocklist, replay
from .classifier import Category, aggregate, attribute_creators, classify, classify_log, percent_third_party
from .cookies import CookieJar, CookieRecord, CookieSyntaxError, SameSite, parse_set_cookie
from .domains import (
    AccessMode,
    Decision,
    Domain,
    Label,
    Party,
    Reason,
    decide_access,
    normalize_domain,
    same_party,
)
from .eventlog import AccessEvent, Api, parse_event_log
from .webstorage import StoragePartition, StoreKind, WebStorage

__version__ = "0.1.0"
