"""
Agmon 距离 φ 与 WKB 振幅 a₀

a₀ 的正则化：被积函数拆成奇异部分 m/t（径向 2m/t）加在 0 处连续的余项 r(t)，
于是 a₀(x) = |x|^m · exp(∫₀^|x| r)（径向 x^{2m} · exp(∫₀^x r)）。
r 在 [0, s_min] 上用 s_min·(1, 2, 3, 4) 四点的三次多项式外推。
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .exceptions import NegativePotentialError, ValidationError
from .potentials import RADIAL, ConfinementDomain, PotentialSpec
from .quadrature import adaptive_gauss_legendre

logger = logging.getLogger(__name__)

NEGATIVE_TOLERANCE = 1e-13
CORE_FRACTION = 2e-3
EPSILON_SEQUENCE = (1e-3, 1e-4, 1e-5)
DEFAULT_TOLERANCE = 1e-12


def _check_tolerance(tol: float):
    if not (1e-14 <= tol <= 1e-6):
        raise ValidationError(f"求积容差需在 [1e-14, 1e-6] 内，实际为 {tol!r}")


def sqrt_potential(p: PotentialSpec, s: np.ndarray) -> np.ndarray:
    """√V(s)，轻微的负值截断为 0，明显为负时报错"""
    values = np.asarray(p.evaluate(s), dtype=float)
    negative = values < -NEGATIVE_TOLERANCE
    if np.any(negative):
        point = float(np.asarray(s, dtype=float).reshape(-1)[np.argmax(negative.reshape(-1))])
        raise NegativePotentialError(f"势函数在 x = {point!r} 处为负", point)
    return np.sqrt(np.maximum(values, 0.0))


def phi_prime(p: PotentialSpec, x):
    """φ'(x) = sgn(x)·√V(x)，写成 x·√(V(x)/x²)，比值在 0 处取 ω²"""
    arr = np.asarray(x, dtype=float)
    omega2 = p.curvature_omega ** 2
    values = np.asarray(p.evaluate(arr), dtype=float)
    if np.any(values < -NEGATIVE_TOLERANCE):
        idx = np.argmax((values < -NEGATIVE_TOLERANCE).reshape(-1))
        point = float(arr.reshape(-1)[idx])
        raise NegativePotentialError(f"势函数在 x = {point!r} 处为负", point)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(arr == 0.0, omega2, np.maximum(values, 0.0) / np.where(arr == 0.0, 1.0, arr * arr))
    result = arr * np.sqrt(ratio)
    return float(result) if result.ndim == 0 else result


def agmon_distance(p: PotentialSpec, x: float, tol: float = DEFAULT_TOLERANCE) -> float:
    """φ(x) = sgn(x)∫₀^x √V(t) dt

    Args:
        p: 势函数
        x: 端点
        tol: 求积容差，[1e-14, 1e-6]

    Returns:
        float: φ(x) ≥ 0

    Raises:
        NegativePotentialError: 积分路径上 V 为负
    """
    _check_tolerance(tol)
    if x == 0.0:
        return 0.0
    sigma = math.copysign(1.0, x)
    extent = abs(x)

    def integrand(t):
        return sigma * phi_prime(p, sigma * t)

    breakpoints = [extent * f for f in (1e-3, 1e-2, 1e-1)]
    return adaptive_gauss_legendre(integrand, 0.0, extent, tol=tol, breakpoints=breakpoints)


def _psi_derivatives(p: PotentialSpec, s: np.ndarray):
    """正半轴上的 ψ' = √V 与 ψ'' = V'/(2√V)"""
    root = sqrt_potential(p, s)
    first = root
    second = np.asarray(p.first_derivative(s), dtype=float) / (2.0 * root)
    return first, second


def _line_remainder(p: PotentialSpec, m: int) -> Callable[[np.ndarray], np.ndarray]:
    omega = p.curvature_omega

    def remainder(s):
        s = np.asarray(s, dtype=float)
        first, second = _psi_derivatives(p, s)
        return (omega * (2 * m + 1) - second - 2.0 * m * first / s) / (2.0 * first)

    return remainder


def _radial_remainder(w: PotentialSpec, m: int, nu: float) -> Callable[[np.ndarray], np.ndarray]:
    omega = w.curvature_omega

    def remainder(t):
        t = np.asarray(t, dtype=float)
        first, second = _psi_derivatives(w, t)
        numerator = (2.0 * omega * (2 * m + 1 + nu) - second
                     - (2.0 * nu + 1.0) * first / t - 4.0 * m * first / t)
        return numerator / (2.0 * first)

    return remainder


def _line_integrand(p: PotentialSpec, m: int) -> Callable[[np.ndarray], np.ndarray]:
    omega = p.curvature_omega

    def integrand(s):
        s = np.asarray(s, dtype=float)
        first, second = _psi_derivatives(p, s)
        return (omega * (2 * m + 1) - second) / (2.0 * first)

    return integrand


def _radial_integrand(w: PotentialSpec, m: int, nu: float) -> Callable[[np.ndarray], np.ndarray]:
    omega = w.curvature_omega

    def integrand(t):
        t = np.asarray(t, dtype=float)
        first, second = _psi_derivatives(w, t)
        return (2.0 * omega * (2 * m + 1 + nu) - second - (2.0 * nu + 1.0) * first / t) / (2.0 * first)

    return integrand


def regularized_integral(remainder: Callable[[np.ndarray], np.ndarray], extent: float,
                         tol: float = DEFAULT_TOLERANCE) -> float:
    """∫₀^extent r，[0, s_min] 段用三次外推多项式积分"""
    s_min = CORE_FRACTION * extent
    nodes = s_min * np.arange(1.0, 5.0)
    coefficients = np.polyfit(nodes, remainder(nodes), 3)
    antiderivative = np.polyint(coefficients)
    core = float(np.polyval(antiderivative, s_min) - np.polyval(antiderivative, 0.0))
    outer = adaptive_gauss_legendre(remainder, s_min, extent, tol=tol,
                                    breakpoints=[extent * 1e-2, extent * 1e-1])
    return core + outer


def _warn_outside(x: float, working_domain: Optional[ConfinementDomain]):
    if working_domain is None:
        return
    enlarged = working_domain.enlarged(1.25)
    if not (enlarged.r_minus <= x <= enlarged.r_plus):
        logger.warning("a₀ 在工作区间 %s 之外求值: x = %r", enlarged.describe(), x)


def prefactor_a0_line(p: PotentialSpec, m: int, x: float, tol: float = DEFAULT_TOLERANCE,
                      working_domain: Optional[ConfinementDomain] = None) -> float:
    """直线情形的 a₀(x)，返回正值 |x|^m·exp(∫₀^|x| r)

    负半轴使用镜像势 V(−s)，与带符号的定义只差因子 sgn(x)^m。

    Raises:
        ValidationError: m < 0 或 x = 0
        QuadratureError: 余项积分不收敛
    """
    _check_tolerance(tol)
    if m < 0:
        raise ValidationError(f"m 必须非负: {m}")
    if x == 0.0:
        raise ValidationError("a₀ 只在 x ≠ 0 处定义")
    _warn_outside(x, working_domain)
    side = p if x > 0 else p.mirrored()
    extent = abs(x)
    exponent = regularized_integral(_line_remainder(side, m), extent, tol)
    return extent ** m * math.exp(exponent)


def prefactor_a0_radial(w: PotentialSpec, m: int, nu: float, x: float, tol: float = DEFAULT_TOLERANCE,
                        working_domain: Optional[ConfinementDomain] = None) -> float:
    """径向情形的 a₀(x) = x^{2m}·exp(∫₀^x r)"""
    _check_tolerance(tol)
    if m < 0:
        raise ValidationError(f"m 必须非负: {m}")
    if nu <= 0:
        raise ValidationError(f"ν 必须为正: {nu}")
    if x <= 0.0:
        raise ValidationError(f"径向 a₀ 只在 x > 0 处定义: {x}")
    _warn_outside(x, working_domain)
    exponent = regularized_integral(_radial_remainder(w, m, nu), x, tol)
    return x ** (2 * m) * math.exp(exponent)


def epsilon_limit_a0(p: PotentialSpec, m: int, x: float, nu: Optional[float] = None,
                     epsilons: Sequence[float] = EPSILON_SEQUENCE, tol: float = DEFAULT_TOLERANCE) -> float:
    """直接计算 ε^p·exp(∫_ε^x g) 在几个 ε 上的值并二次外推到 ε = 0

    作为正则化积分的独立对照；nu 为 None 时按直线情形计算。
    """
    radial = nu is not None
    if radial:
        integrand = _radial_integrand(p, m, nu)
        power = 2 * m
        side, extent = p, x
    else:
        side = p if x > 0 else p.mirrored()
        integrand = _line_integrand(side, m)
        power = m
        extent = abs(x)
    values = []
    for eps in epsilons:
        breakpoints = [eps * 10.0 ** k for k in range(1, 8) if eps * 10.0 ** k < extent]
        integral = adaptive_gauss_legendre(integrand, eps, extent, tol=tol, breakpoints=breakpoints)
        values.append(math.exp(power * math.log(eps) + integral))
    coefficients = np.polyfit(np.asarray(epsilons), np.asarray(values), len(epsilons) - 1)
    return float(np.polyval(coefficients, 0.0))


@dataclass(frozen=True)
class AgmonProfile:
    """势函数的 Agmon 几何"""

    potential: PotentialSpec
    quadrature_tolerance: float = DEFAULT_TOLERANCE

    def phi(self, x: float) -> float:
        return agmon_distance(self.potential, x, self.quadrature_tolerance)

    def phi_prime(self, x):
        return phi_prime(self.potential, x)

    def a0(self, m: int, x: float, nu: Optional[float] = None,
           working_domain: Optional[ConfinementDomain] = None) -> float:
        if self.potential.kind == RADIAL:
            if nu is None:
                raise ValidationError("径向势函数的 a₀ 需要 ν")
            return prefactor_a0_radial(self.potential, m, nu, x, self.quadrature_tolerance, working_domain)
        return prefactor_a0_line(self.potential, m, x, self.quadrature_tolerance, working_domain)
