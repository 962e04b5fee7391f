import math

import numpy as np
import pytest

from src.exceptions import QuadratureError
from src.quadrature import adaptive_gauss_legendre, gauss_panel


def test_panel_exact_for_polynomials():
    assert gauss_panel(lambda x: x ** 29, 0.0, 1.0) == pytest.approx(1.0 / 30.0, rel=1e-14)


@pytest.mark.parametrize("f, a, b, exact", [
    (np.exp, 0.0, 3.0, math.exp(3.0) - 1.0),
    (lambda x: np.power(x, 1.5), 0.0, 1.0, 0.4),
    (lambda x: 1.0 / (1.0 + x * x), -5.0, 5.0, 2.0 * math.atan(5.0)),
    (lambda x: np.sin(50.0 * x), 0.0, 1.0, (1.0 - math.cos(50.0)) / 50.0),
])
def test_adaptive_integrals(f, a, b, exact):
    assert adaptive_gauss_legendre(f, a, b, tol=1e-12) == pytest.approx(exact, rel=1e-10, abs=1e-12)


def test_reversed_limits_and_breakpoints():
    forward = adaptive_gauss_legendre(np.abs, -1.0, 2.0, breakpoints=[0.0])
    assert forward == pytest.approx(2.5, rel=1e-14)
    assert adaptive_gauss_legendre(np.abs, 2.0, -1.0, breakpoints=[0.0]) == pytest.approx(-2.5, rel=1e-14)
    assert adaptive_gauss_legendre(np.abs, 1.0, 1.0) == 0.0


def test_non_finite_integrand_raises():
    with pytest.raises(QuadratureError):
        adaptive_gauss_legendre(lambda x: np.full_like(x, np.nan), 0.0, 1.0)


def test_panel_budget_exhausted():
    with pytest.raises(QuadratureError):
        adaptive_gauss_legendre(lambda x: np.sign(x - 0.3) * 1e6, 0.0, 1.0, max_panels=4)
