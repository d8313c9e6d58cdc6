"""Shared fixtures: the two full bound assemblies are expensive, so each runs once."""

import time

import pytest

from sievelevel import ExponentConfig, assemble_bound
from sievelevel.sieve_integrals import GOLDBACH_PARAMS, TWIN_PARAMS

_cache = {}


def _report(name):
    if name not in _cache:
        params, alpha = {"twin": (TWIN_PARAMS, 0), "goldbach": (GOLDBACH_PARAMS, 1)}[name]
        start = time.perf_counter()
        report = assemble_bound(params, ExponentConfig(alpha=alpha))
        _cache[name] = (report, time.perf_counter() - start)
    return _cache[name]


@pytest.fixture(scope="session")
def twin_run():
    """(BoundReport, wall seconds) at the twin-prime parameters."""
    return _report("twin")


@pytest.fixture(scope="session")
def goldbach_run():
    return _report("goldbach")


ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, title: str, ok: bool, detail: str) -> None:
    """Store (and print) one PASS/FAIL line; the test asserts ``ok`` afterwards."""
    line = f"{'PASS' if ok else 'FAIL'} criterion {number} {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
