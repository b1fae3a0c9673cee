import functools
import re

import pytest

from narrowwindow.geometry import Geometry
from narrowwindow.modematch import solve_ground_state

_LINES = pytest.StashKey[dict]()


@functools.lru_cache(maxsize=None)
def cached_solve(d1, d2, a, tol=1e-6):
    return solve_ground_state(Geometry(d1, d2, a), tol=tol)


@pytest.fixture(scope="session")
def solve():
    return cached_solve


def pytest_configure(config):
    config.stash[_LINES] = {}


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line for the acceptance criterion of the calling test."""
    number = int(re.search(r"criterion_(\d+)", request.node.name).group(1))
    lines = request.config.stash[_LINES]

    def record(ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        lines[number] = line
        print(line)
        return ok

    yield record
    if number not in lines:
        lines[number] = f"FAIL criterion {number}: raised before a verdict"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for number in sorted(lines):
            terminalreporter.write_line(lines[number])
