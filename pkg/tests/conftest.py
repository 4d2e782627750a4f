import numpy as np
import pytest

from bures.algebra import AlgebraSpec, matrix_algebra

SPECS = {
    "M2": matrix_algebra(2),
    "M3": matrix_algebra(3),
    "C+M2": AlgebraSpec((1, 2), (2.0, 1.0)),
}


@pytest.fixture(params=sorted(SPECS), ids=sorted(SPECS))
def spec(request):
    return SPECS[request.param]


@pytest.fixture
def m2():
    return matrix_algebra(2)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# One line per acceptance criterion at the end of the run.
_acceptance = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if item.module.__name__.endswith("test_acceptance") and (rep.when == "call" or rep.failed):
        doc = (item.function.__doc__ or item.name).strip().splitlines()[0]
        outcome = "xfail" if hasattr(rep, "wasxfail") else rep.outcome
        prev = _acceptance.get(item.nodeid, (doc, "passed"))[1]
        _acceptance[item.nodeid] = (doc, "failed" if rep.failed or prev == "failed" else outcome)


_LABELS = {"passed": "PASS", "xfail": "FAIL (expected, see reason)", "skipped": "SKIP"}


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for nodeid, (doc, outcome) in _acceptance.items():
        param = nodeid.partition("[")[2].rstrip("]")
        label = _LABELS.get(outcome, "FAIL")
        terminalreporter.write_line(f"{label}  {doc}" + (f"  [{param}]" if param else ""))
