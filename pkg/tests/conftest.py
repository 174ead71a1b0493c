import pytest

from twistabc.reduction import Build, MiniatureConfig
from twistabc.trees import TreePrefix

CRITERIA: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number n")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    n, title = mark.args
    if rep.when == "call" or (rep.when == "setup" and rep.failed):
        CRITERIA[n] = (title, rep.passed, rep.duration)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        title, ok, secs = CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {title}  ({secs:.1f} s)")


@pytest.fixture(scope="session")
def branch_prefix():
    """Root, (0) and (0, 0): one node of each length up to 2."""
    return TreePrefix([(), (0,), (0, 0)], 3)


@pytest.fixture(scope="session")
def mini_build(branch_prefix):
    return Build(branch_prefix, 2, MiniatureConfig())
