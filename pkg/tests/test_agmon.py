import math

import numpy as np
import pytest
from scipy.integrate import quad

from src.agmon import (
    AgmonProfile,
    agmon_distance,
    epsilon_limit_a0,
    phi_prime,
    prefactor_a0_line,
    prefactor_a0_radial,
)
from src.exceptions import NegativePotentialError, ValidationError
from src.potentials import ConfinementDomain, expression_potential


@pytest.mark.parametrize("x", [0.3, 1.0, -1.0, 2.5])
def test_harmonic_distance(harmonic, x):
    assert agmon_distance(harmonic, x) == pytest.approx(0.5 * x * x, rel=1e-12)


def test_quartic_distance_closed_form(quartic):
    for x in (0.5, 1.0, -1.5):
        exact = ((1.0 + x * x) ** 1.5 - 1.0) / 3.0
        assert agmon_distance(quartic, x) == pytest.approx(exact, rel=1e-11)


def test_distance_is_even_for_even_potentials(quartic):
    assert agmon_distance(quartic, -0.8) == pytest.approx(agmon_distance(quartic, 0.8), rel=1e-13)
    assert agmon_distance(quartic, 0.0) == 0.0


def test_phi_prime_is_odd(quartic):
    xs = np.array([-1.0, -0.25, 0.0, 0.25, 1.0])
    np.testing.assert_allclose(phi_prime(quartic, xs), xs * np.sqrt(1.0 + xs * xs))


@pytest.mark.parametrize("m", [0, 1, 2, 3])
def test_harmonic_prefactor_is_monomial(harmonic, m):
    for x in (0.4, 1.3, -0.7):
        assert prefactor_a0_line(harmonic, m, x) == pytest.approx(abs(x) ** m, rel=1e-10)


@pytest.mark.parametrize("m, nu", [(0, 0.5), (1, 0.5), (2, 1.5)])
def test_radial_harmonic_prefactor_is_monomial(radial_harmonic, m, nu):
    x = 0.9
    assert prefactor_a0_radial(radial_harmonic, m, nu, x) == pytest.approx(x ** (2 * m), rel=1e-10)


def test_quartic_prefactor_against_direct_integral(quartic):
    def integrand(s):
        root = math.sqrt(1.0 + s * s)
        second = (1.0 + 2.0 * s * s) / root
        return (1.0 - second) / (2.0 * s * root)

    x = 0.8
    exponent, _ = quad(integrand, 0.0, x, epsabs=1e-14, epsrel=1e-13)
    assert prefactor_a0_line(quartic, 0, x) == pytest.approx(math.exp(exponent), rel=1e-9)


@pytest.mark.parametrize("m", [0, 1])
def test_regularized_agrees_with_epsilon_limit_line(quartic, m):
    x = 0.5
    assert prefactor_a0_line(quartic, m, x) == pytest.approx(epsilon_limit_a0(quartic, m, x), rel=1e-6)


def test_regularized_agrees_with_epsilon_limit_radial(radial_quartic):
    x = 0.5
    regularized = prefactor_a0_radial(radial_quartic, 0, 0.5, x)
    assert regularized == pytest.approx(epsilon_limit_a0(radial_quartic, 0, x, nu=0.5), rel=1e-6)


def test_left_endpoint_uses_mirrored_potential():
    p = expression_potential("x^2+x^3/4")
    assert prefactor_a0_line(p, 1, -0.6) == pytest.approx(prefactor_a0_line(p.mirrored(), 1, 0.6), rel=1e-13)
    assert prefactor_a0_line(p, 1, -0.6) != pytest.approx(prefactor_a0_line(p, 1, 0.6), rel=1e-6)


def test_negative_potential_raises():
    p = expression_potential("x^2-2*x^4")
    with pytest.raises(NegativePotentialError) as info:
        agmon_distance(p, 1.0)
    assert info.value.point > 1.0 / math.sqrt(2.0)


def test_invalid_arguments(harmonic, radial_harmonic):
    with pytest.raises(ValidationError):
        agmon_distance(harmonic, 1.0, tol=1e-3)
    with pytest.raises(ValidationError):
        prefactor_a0_line(harmonic, 0, 0.0)
    with pytest.raises(ValidationError):
        prefactor_a0_line(harmonic, -1, 0.5)
    with pytest.raises(ValidationError):
        prefactor_a0_radial(radial_harmonic, 0, 0.5, -0.5)


def test_outside_working_domain_is_logged(harmonic, caplog):
    with caplog.at_level("WARNING"):
        prefactor_a0_line(harmonic, 0, 2.0, working_domain=ConfinementDomain.interval(-1.0, 1.0))
    assert "工作区间" in caplog.text


def test_profile_dispatch(harmonic, radial_harmonic):
    assert AgmonProfile(harmonic).phi(2.0) == pytest.approx(2.0)
    assert AgmonProfile(radial_harmonic).a0(1, 0.5, nu=1.5) == pytest.approx(0.25, rel=1e-10)
    with pytest.raises(ValidationError):
        AgmonProfile(radial_harmonic).a0(1, 0.5)
