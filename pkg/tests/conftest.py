from __future__ import annotations

import pytest

from storagelabels.cookies import CookieJar, parse_set_cookie
from storagelabels.domains import default_suffix_list

TABLE5_HEADERS = [
    "session_id=123; Domain=fp.com; Reader={cmp.com}; Writer={}",
    "__consent=TRUE; Domain=fp.com; Owner=cmp.com; Reader={tracker.com}; Writer={}",
    "tracker_id=567; Domain=fp.com; Owner=cmp.com; Reader={tracker.com}; Writer={tracker.com}",
]


def dom(host: str):
    return default_suffix_list().normalize(host)


def table5_jar(enforce: bool = True) -> CookieJar:
    """The three cookies of the fp.com worked example, set over HTTP."""
    jar = CookieJar(enforce=enforce)
    for header in TABLE5_HEADERS:
        jar.http_set_cookie(parse_set_cookie(header, dom("fp.com"), 0.0))
    return jar


@pytest.fixture
def d():
    return dom


@pytest.fixture
def jar5():
    return table5_jar()
