import pytest
from hypothesis import HealthCheck, settings

from hpseries.qfield import DualIndex, ideal_from_gen, make_field

settings.register_profile(
    "pkg",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("pkg")


@pytest.fixture(scope="session")
def field5():
    return make_field(5)


@pytest.fixture(scope="session")
def nu5(field5):
    # omega/sqrt(5): totally positive, trace 1, frequency (1, 1)
    return DualIndex.from_numerator(field5, field5.omega)


@pytest.fixture(scope="session")
def mu5(field5):
    # (omega-1)/sqrt(5): the other trace-1 totally positive index, freq (1, 0)
    return DualIndex.from_numerator(field5, field5.element(-1, 1))


@pytest.fixture(scope="session")
def unit_ideal5(field5):
    return ideal_from_gen(field5.one)
