import os
from collections import defaultdict

import hypothesis
import numpy as np
import pytest

np.seterr(all="warn", under="ignore")

hypothesis.settings.register_profile("default", deadline=None, print_blob=True)
hypothesis.settings.register_profile("fast", deadline=None, max_examples=10)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# criterion number -> title, list of outcomes, list of details
_TITLES: dict[int, str] = {}
_OUTCOMES: dict[int, list[bool]] = defaultdict(list)
_DETAILS: dict[int, list[str]] = defaultdict(list)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion n")


@pytest.fixture
def report(request):
    """Record a measured value on the acceptance line of the running test."""
    n = request.node.get_closest_marker("criterion").args[0]

    def _add(detail: str):
        _DETAILS[n].append(detail)
        print(f"criterion {n}: {detail}")

    return _add


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        n, title = marker.args
        _TITLES[n] = title
        _OUTCOMES[n].append(rep.passed)


def pytest_terminal_summary(terminalreporter):
    if not _TITLES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_TITLES):
        status = "PASS" if all(_OUTCOMES[n]) else "FAIL"
        line = f"[{status}] {n:>2}. {_TITLES[n]}"
        if _DETAILS[n]:
            line += " :: " + "; ".join(_DETAILS[n])
        terminalreporter.write_line(line)
