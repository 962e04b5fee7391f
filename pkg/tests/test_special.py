import math

import pytest
from scipy import special as sp

from src.special import FACTORIAL_TABLE, factorial, gamma, gamma_half_integer, log_factorial, log_gamma


@pytest.mark.parametrize("x", [0.1, 0.5, 1.0, 1.5, 2.5, 3.7, 7.5, 12.25, 20.0])
def test_gamma_matches_scipy(x):
    assert gamma(x) == pytest.approx(sp.gamma(x), rel=1e-13)
    assert log_gamma(x) == pytest.approx(sp.gammaln(x), rel=1e-13, abs=1e-14)


@pytest.mark.parametrize("k", range(0, 12))
def test_gamma_half_integer_identity(k):
    assert gamma(k + 0.5) == pytest.approx(gamma_half_integer(k), rel=1e-13)


def test_gamma_reflection_for_negative_arguments():
    assert gamma(-0.5) == pytest.approx(-2.0 * math.sqrt(math.pi), rel=1e-13)
    with pytest.raises(ValueError):
        gamma(-2.0)


def test_factorial_table_is_exact():
    assert FACTORIAL_TABLE[0] == 1
    assert FACTORIAL_TABLE[20] == math.factorial(20)
    assert factorial(5) == 120.0
    assert log_factorial(10) == pytest.approx(math.log(3628800))
    assert factorial(25) == pytest.approx(math.factorial(25), rel=1e-12)


def test_negative_factorial_rejected():
    with pytest.raises(ValueError):
        factorial(-1)
