import pathlib

import pytest
from hypothesis import HealthCheck, settings

from legn.branch import BranchParam, equation, parametrize_equation
from legn.conormal import conormal
from legn.series import WeightSystem

settings.register_profile(
    "legn",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("legn")

DATA = pathlib.Path(__file__).parent / "data"


@pytest.fixture
def data_dir():
    return DATA


@pytest.fixture(scope="session")
def ws411():
    return WeightSystem(4, 11)


@pytest.fixture(scope="session")
def L0():
    return conormal(BranchParam.monomial_curve(4, 11))


@pytest.fixture(scope="session")
def f1_branch():
    return parametrize_equation(equation(4, 11, {(6, 2): 1}))


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for number in sorted(lines):
            terminalreporter.write_line(lines[number])
