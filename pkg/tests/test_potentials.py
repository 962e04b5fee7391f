import math

import numpy as np
import pytest

from src.exceptions import DegenerateMinimumError, DomainError, ParseError, ValidationError
from src.potentials import (
    LINE,
    RADIAL,
    ConfinementDomain,
    PotentialSpec,
    cosh_potential,
    curvature_at_minimum,
    expression_potential,
    harmonic_potential,
    hydrogen_effective_potential,
    normalize_to_unit_curvature,
    quartic_potential,
    resolve_potential,
    validate_potential,
)


def test_domain_construction():
    interval = ConfinementDomain.interval(-1.0, 2.0)
    assert interval.kind == LINE
    assert interval.length == 3.0
    assert interval.enlarged(1.25).r_plus == pytest.approx(2.5)
    box = ConfinementDomain.box(3.0)
    assert box.kind == RADIAL
    assert box.r_minus == 0.0
    assert box.contains(1.0) and not box.contains(4.0)


@pytest.mark.parametrize("r_minus, r_plus", [(0.5, 1.0), (-1.0, -0.5), (0.0, 1.0), (-1.0, math.inf)])
def test_interval_must_contain_minimum(r_minus, r_plus):
    with pytest.raises(DomainError):
        ConfinementDomain.interval(r_minus, r_plus)


def test_box_must_be_positive():
    with pytest.raises(DomainError):
        ConfinementDomain.box(0.0)


@pytest.mark.parametrize("spec, omega", [
    (harmonic_potential(), 1.0),
    (harmonic_potential(4.0), 2.0),
    (quartic_potential(1.0), 1.0),
    (cosh_potential(), math.sqrt(0.5)),
    (expression_potential("3*x^2+x^4"), math.sqrt(3.0)),
])
def test_curvature_at_minimum(spec, omega):
    assert spec.curvature_omega == pytest.approx(omega, rel=1e-12)


def test_curvature_by_finite_differences():
    spec = PotentialSpec(kind=LINE, evaluate=lambda x: 2.0 * x * x + x ** 4)
    assert curvature_at_minimum(spec) == pytest.approx(math.sqrt(2.0), rel=1e-8)


def test_degenerate_minimum():
    with pytest.raises(DegenerateMinimumError, match="degenerate minimum"):
        curvature_at_minimum(expression_potential("x^4"))
    with pytest.raises(DegenerateMinimumError):
        harmonic_potential(0.0)


def test_validate_accepts_standard_potentials(unit_interval, unit_box):
    assert validate_potential(harmonic_potential(), unit_interval).passed
    assert validate_potential(quartic_potential(1.0), unit_interval).passed
    assert validate_potential(harmonic_potential(kind=RADIAL), unit_box).passed
    assert validate_potential(expression_potential("x^2+x^4", kind=RADIAL), unit_box).passed


def test_validate_reports_violations_without_raising(unit_interval):
    shifted = expression_potential("(x-0.1)^2")
    report = validate_potential(shifted, unit_interval)
    assert not report.passed
    assert {"2"} <= {v.assumption for v in report.violations}
    assert "假设" in report.summary()


def test_validate_flags_tail_and_oddness(unit_box):
    tail = expression_potential("x^2-x^4/4")
    report = validate_potential(tail, ConfinementDomain.interval(-1.5, 1.5))
    assert "3" in {v.assumption for v in report.violations}
    odd = expression_potential("x^2+x^3", kind=RADIAL)
    report = validate_potential(odd, unit_box)
    assert "9" in {v.assumption for v in report.violations}


def test_validate_flags_singularity(unit_interval):
    report = validate_potential(expression_potential("x^2/(x-0.75)^2"), unit_interval)
    assert not report.passed


def test_validate_is_pure(unit_interval):
    spec = expression_potential("(x-0.1)^2")
    assert validate_potential(spec, unit_interval) == validate_potential(spec, unit_interval)


def test_taylor_coefficients_from_expression():
    spec = expression_potential("x^2+3*x^4", kind=RADIAL)
    assert spec.taylor_coefficients(3) == pytest.approx((0.0, 1.0, 3.0))
    assert harmonic_potential(kind=RADIAL).taylor_coefficients(4) == (0.0, 1.0, 0.0, 0.0)
    assert cosh_potential().taylor_coefficients(3) == pytest.approx((0.0, 0.5, 1.0 / 24.0))


def test_argument_scale_and_mirror():
    spec = expression_potential("x^2+x^3+x^4")
    scaled = spec.with_argument_scale(2.0)
    assert scaled.evaluate(0.3) == pytest.approx(spec.evaluate(0.6))
    assert scaled.first_derivative(0.3) == pytest.approx(2.0 * spec.first_derivative(0.6))
    assert scaled.second_derivative(0.3) == pytest.approx(4.0 * spec.second_derivative(0.6))
    mirrored = spec.mirrored()
    assert mirrored.evaluate(0.4) == pytest.approx(spec.evaluate(-0.4))


def test_normalize_to_unit_curvature():
    spec = expression_potential("4*x^2+x^4")
    domain = ConfinementDomain.interval(-1.0, 0.5)
    normalized, scaled_domain, h = normalize_to_unit_curvature(spec, domain, 0.1)
    assert normalized.curvature_omega == 1.0
    assert normalized.second_derivative(0.0) == pytest.approx(2.0)
    assert scaled_domain.r_minus == pytest.approx(-2.0)
    assert scaled_domain.r_plus == pytest.approx(1.0)
    assert h == pytest.approx(0.2)
    assert normalized.evaluate(scaled_domain.r_plus) == pytest.approx(spec.evaluate(0.5))


def test_normalize_is_identity_for_unit_curvature(unit_interval):
    spec = quartic_potential(1.0)
    assert normalize_to_unit_curvature(spec, unit_interval, 0.1) == (spec, unit_interval, 0.1)


def test_normalize_keeps_harmonic_closed_form():
    normalized, _, h = normalize_to_unit_curvature(harmonic_potential(9.0), ConfinementDomain.interval(-1, 1), 0.1)
    assert normalized.harmonic_coefficient == 1.0
    assert h == pytest.approx(0.3)


@pytest.mark.parametrize("text, name", [
    ("harmonic", "harmonic"),
    ("harmonic(2)", "harmonic(2.0)"),
    ("quartic(0.5)", "quartic(0.5)"),
    ("cosh", "cosh"),
    ("x^2 + x^4", "x^2 + x^4"),
])
def test_resolve_potential(text, name):
    assert resolve_potential(text).name == name


def test_resolve_hydrogen_effective():
    spec = resolve_potential("hydrogen-effective(2, 1)")
    assert spec.kind == RADIAL
    assert spec.metadata["nu"] == 3.0
    assert spec.harmonic_coefficient == 1.0


def test_resolve_errors():
    with pytest.raises(ValidationError):
        resolve_potential("quartic(1, 2)")
    with pytest.raises(ParseError):
        resolve_potential("x^2 +")


def test_evaluate_vectorized():
    spec = expression_potential("x^2+x^4")
    np.testing.assert_allclose(spec.evaluate(np.array([0.0, 1.0, 2.0])), [0.0, 2.0, 20.0])
