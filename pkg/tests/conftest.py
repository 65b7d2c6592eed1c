import math

import pytest
from hypothesis import HealthCheck, settings

from cmpassage.levy import LevyExponent
from cmpassage.measures import MeasureRepr
from cmpassage.model import ModelSpec

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def brownian():
    return LevyExponent(gaussian=1.0)


@pytest.fixture
def feller():
    # psi(lam) = lam^2
    return LevyExponent(gaussian=2.0)


@pytest.fixture
def lattice_model(brownian):
    return ModelSpec(brownian, gamma=MeasureRepr.dirac(1.0))


@pytest.fixture
def levy_model(brownian):
    return ModelSpec(brownian)


@pytest.fixture
def csbp_model(feller):
    return ModelSpec(feller, gamma=MeasureRepr.lebesgue_measure(), interval_lower=0.0, lower_included=True)


def close(a, b, rel=1e-12):
    return math.isclose(a, b, rel_tol=rel, abs_tol=0.0)


# one line per acceptance criterion, printed after the run
ACCEPTANCE = {}


@pytest.fixture
def criterion(request):
    def record(number, passed, detail):
        ACCEPTANCE[number] = (bool(passed), detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
