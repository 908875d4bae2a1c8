import pytest

from nonlocal_epidemic.discrete_ops import build_grid
from nonlocal_epidemic.eigen import find_lstar
from nonlocal_epidemic.model import canonical_params


@pytest.fixture(scope="session")
def grid():
    return build_grid(0.02)


@pytest.fixture(scope="session")
def P1():
    return canonical_params("P1")


@pytest.fixture(scope="session")
def P2():
    return canonical_params("P2")


@pytest.fixture(scope="session")
def lstar(P1, grid):
    return find_lstar(P1, grid, tol=1e-4)


# acceptance bookkeeping: each test marked ``criterion(n, title)`` gets a
# recorder and ends up as one PASS/FAIL line in the terminal summary

_CRITERIA = {}


class Criterion:
    def __init__(self, number, title):
        self.number = number
        self.title = title
        self.checks = []

    def check(self, label, ok, detail=""):
        self.checks.append((label, bool(ok), detail))
        return bool(ok)

    @property
    def ok(self):
        return bool(self.checks) and all(c[1] for c in self.checks)

    def assert_all(self):
        bad = [f"{label} ({detail})" for label, ok, detail in self.checks if not ok]
        assert not bad, "; ".join(bad)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


@pytest.fixture
def criterion(request):
    mark = request.node.get_closest_marker("criterion")
    c = Criterion(*mark.args)
    yield c
    rep = getattr(request.node, "rep_call", None)
    passed = rep is not None and rep.passed and c.ok
    _CRITERIA[c.number] = (passed, c)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        passed, c = _CRITERIA[n]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] criterion {n}: {c.title}")
        for label, ok, detail in c.checks:
            terminalreporter.write_line(f"    {'ok ' if ok else 'BAD'} {label}: {detail}")
