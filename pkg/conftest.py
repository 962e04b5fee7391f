import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from src.potentials import (  # noqa: E402
    RADIAL,
    ConfinementDomain,
    expression_potential,
    harmonic_potential,
    quartic_potential,
)


@pytest.fixture
def harmonic():
    return harmonic_potential()


@pytest.fixture
def quartic():
    return quartic_potential(1.0)


@pytest.fixture
def radial_harmonic():
    return harmonic_potential(kind=RADIAL)


@pytest.fixture
def radial_quartic():
    return expression_potential("x^2+x^4", kind=RADIAL)


@pytest.fixture
def unit_interval():
    return ConfinementDomain.interval(-1.0, 1.0)


@pytest.fixture
def unit_box():
    return ConfinementDomain.box(1.0)
