import math

import pytest

from src.scaled import ScaledValue


def test_normalized_mantissa_range():
    for value in (1.0, 3.0, -0.001, 12345.678, -7e-300):
        scaled = ScaledValue.from_float(value)
        assert 1.0 <= abs(scaled.mantissa) < 2.0
        assert scaled.to_float() == pytest.approx(value, rel=1e-12)


def test_zero():
    zero = ScaledValue.from_float(0.0)
    assert zero.is_zero
    assert zero.sign() == 0.0
    assert zero.log_abs() == -math.inf
    assert (zero * ScaledValue.from_log(500.0)).is_zero


def test_products_beyond_double_range():
    big = ScaledValue.from_log(800.0)
    small = ScaledValue.from_log(-790.0, sign=-1.0)
    product = big * small
    assert product.to_float() == pytest.approx(-math.exp(10.0), rel=1e-12)
    assert (big / small).log_abs() == pytest.approx(1590.0)
    assert big.to_float() == math.inf


def test_addition_aligns_scales():
    a = ScaledValue.from_log(1000.0)
    b = ScaledValue.from_log(1000.0 + math.log(3.0))
    total = a + b
    assert total.log_abs() == pytest.approx(1000.0 + math.log(4.0), abs=1e-12)
    assert (a - a).is_zero
    assert (a + ScaledValue.from_log(-100.0)).log_abs() == pytest.approx(1000.0)


def test_compare_magnitude():
    a = ScaledValue.from_log(10.0, sign=-1.0)
    b = ScaledValue.from_log(9.0)
    assert a.compare_magnitude(b) == 1
    assert b.compare_magnitude(a) == -1
    assert a.compare_magnitude(-a) == 0


def test_non_finite_components_rejected():
    with pytest.raises(ValueError):
        ScaledValue(math.nan, 0.0)
    with pytest.raises(ZeroDivisionError):
        ScaledValue.from_float(1.0) / 0.0
