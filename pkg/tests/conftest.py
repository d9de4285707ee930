import pathlib
from fractions import Fraction as F

import pytest
from hypothesis import HealthCheck, settings

from napt.complex import MetricGraph
from napt.graph import PLMetric

settings.register_profile(
    "napt", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("napt")

FIXTURES = pathlib.Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures():
    return FIXTURES


@pytest.fixture
def g1():
    """Path a-b of length 1, reference delta_a + delta_b."""
    return MetricGraph(["a", "b"], [("e", "a", "b", 1)], {"a": 1, "b": 1}, 2)


@pytest.fixture
def vshape(g1):
    return PLMetric(g1, {"a": 0, "b": 0}, {"e": [(F(1, 2), F(-1, 2))]})


@pytest.fixture
def tilt(g1):
    return PLMetric(g1, {"a": 0, "b": 1})


@pytest.fixture
def tent(g1):
    return PLMetric(g1, {"a": 0, "b": 0}, {"e": [(F(1, 2), F(1, 2))]})


_ACCEPTANCE: dict = {}


@pytest.fixture
def record():
    """Store a one-line verdict for the acceptance summary."""

    def _record(number, title, ok, detail=""):
        _ACCEPTANCE[number] = (title, ok, detail)

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, ok, detail = _ACCEPTANCE[number]
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))
