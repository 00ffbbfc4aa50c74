import cmath
import math

import pytest
from hypothesis import HealthCheck, settings

from blaschke_p2.atlas import assemble_domains
from blaschke_p2.continuation import simultaneous_continuation
from blaschke_p2.core import BlaschkeSpec, Family, Sign

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

ALPHA = math.pi / 3


def two_zero(r, sign=Sign.PLUS, n=3, alpha=ALPHA):
    return BlaschkeSpec(Family.TWO_ZERO, n, cmath.rect(r, alpha), sign)


def ring(r, sign=Sign.PLUS, n=3, alpha=ALPHA):
    return BlaschkeSpec(Family.RING_ZEROS, n, cmath.rect(r, alpha), sign)


@pytest.fixture(scope="session")
def fig1():
    return two_zero(2 / 3)


@pytest.fixture(scope="session")
def fig1_arcs(fig1):
    return simultaneous_continuation(fig1)


@pytest.fixture(scope="session")
def fig1_atlas(fig1):
    return assemble_domains(fig1)


@pytest.fixture(scope="session")
def ring_atlas():
    return assemble_domains(ring(2 / 3))


@pytest.fixture(scope="session")
def threshold():
    return two_zero(1 / math.sqrt(3), Sign.MINUS)
