import functools

import pytest

from phaseguard.config import load_scenario
from phaseguard.engine import run_scenario


@functools.lru_cache(maxsize=None)
def bundled_run(name: str):
    """(trace, report) for a bundled scenario, computed once per session."""
    return run_scenario(load_scenario(name))


@pytest.fixture(scope="session")
def runs():
    return bundled_run


# -- acceptance summary ----------------------------------------------------------

_CRITERIA: dict[str, tuple[str, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        number = str(marker.args[0])
        status = "PASS" if rep.outcome == "passed" else "FAIL"
        title = marker.args[1] if len(marker.args) > 1 else item.name
        if number not in _CRITERIA or status == "FAIL":
            _CRITERIA[number] = (status, title)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion test")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA, key=int):
        status, title = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number}: {status}  {title}")
