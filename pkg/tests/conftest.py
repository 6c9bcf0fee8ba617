import numpy as np
import pytest

from qcert import numeric_kernel


@pytest.fixture(params=sorted(numeric_kernel.available_backends()))
def backend(request):
    previous = numeric_kernel.set_backend(request.param)
    yield request.param
    numeric_kernel.set_backend(previous)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


_CRITERIA = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    number, text = mark.args
    ok = rep.passed and _CRITERIA.get(number, (text, True))[1]
    if rep.when == "call" or not rep.passed:
        _CRITERIA[number] = (text, ok)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        text, ok = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {text}")
