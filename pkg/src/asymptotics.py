"""
位移渐近公式

所有指数小量都先在对数域计算，再转换成浮点数；下溢时 leading_value 为 0，
log_value 仍然有限。
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .agmon import agmon_distance, prefactor_a0_line, prefactor_a0_radial
from .exceptions import ValidationError
from .potentials import LINE, RADIAL, ConfinementDomain, PotentialSpec, normalize_to_unit_curvature
from .shooting import ModeSpec
from .special import log_factorial, log_gamma

logger = logging.getLogger(__name__)

NORMALIZED = "normalized"
DIRECT = "direct"
ROUTES = (NORMALIZED, DIRECT)

_LOG_SQRT_PI = 0.5 * math.log(math.pi)


@dataclass(frozen=True)
class ShiftPrediction:
    """领头阶位移

    exponent 为主导端点的 2φ/h（氢原子为 ZR/(nh²)），
    per_endpoint 按 (r₋, r₊) 排列，仅直线情形有值。
    """

    leading_value: float
    log_value: float
    exponent: float
    prefactor_power: float
    per_endpoint: Optional[Tuple[float, float]] = None
    per_endpoint_log: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        if not math.isfinite(self.log_value):
            raise ValidationError(f"位移的对数值非有限: {self.log_value!r}")


def _safe_exp(log_value: float) -> float:
    return math.exp(log_value) if log_value < 709.0 else math.inf


def _check_route(route: str):
    if route not in ROUTES:
        raise ValidationError(f"未知的求值路线: {route}，可选 {ROUTES}")


# ---------------------------------------------------------------------------
# 定理形式
# ---------------------------------------------------------------------------

def _line_endpoint_log(p: PotentialSpec, m: int, h: float, r: float, omega: float) -> Tuple[float, float]:
    """单个端点的 log(e^{−2φ/h}·s₀) 与 2φ/h"""
    phi = agmon_distance(p, r)
    a0 = prefactor_a0_line(p, m, r)
    log_s0 = ((m + 1) * math.log(2.0) - log_factorial(m) - _LOG_SQRT_PI
              + (m + 0.5) * math.log(omega) + 0.5 * math.log(p.evaluate(r)) + 2.0 * math.log(a0))
    return log_s0 - 2.0 * phi / h, 2.0 * phi / h


def shift_leading_line(p: PotentialSpec, domain: ConfinementDomain, mode: ModeSpec,
                       route: str = NORMALIZED) -> ShiftPrediction:
    """h^{½−m} Σ± e^{−2φ(r±)/h} s₀±，s₀± = 2^{m+1}/(m!√π)·ω^{m+½}·√V(r±)·a₀(r±)²

    route="normalized" 先把 V''(0) 归一化为 2 再用 ω = 1 的公式，
    route="direct" 直接在原问题上带 ω 的幂次计算。
    """
    _check_route(route)
    if domain.kind != LINE or mode.radial:
        raise ValidationError("shift_leading_line 需要直线区间与直线模式")
    m = mode.m
    if route == NORMALIZED:
        p, domain, h = normalize_to_unit_curvature(p, domain, mode.h)
        omega = 1.0
    else:
        h = mode.h
        omega = p.curvature_omega
    log_power = (0.5 - m) * math.log(h)
    minus_log, minus_exponent = _line_endpoint_log(p, m, h, domain.r_minus, omega)
    plus_log, plus_exponent = _line_endpoint_log(p, m, h, domain.r_plus, omega)
    per_log = (log_power + minus_log, log_power + plus_log)
    total_log = float(np.logaddexp(*per_log))
    return ShiftPrediction(
        leading_value=_safe_exp(total_log),
        log_value=total_log,
        exponent=min(minus_exponent, plus_exponent),
        prefactor_power=0.5 - m,
        per_endpoint=(_safe_exp(per_log[0]), _safe_exp(per_log[1])),
        per_endpoint_log=per_log,
    )


def shift_leading_radial(w: PotentialSpec, domain: ConfinementDomain, mode: ModeSpec,
                         route: str = NORMALIZED) -> ShiftPrediction:
    """h^{−ν−2m} e^{−2φ(L)/h} s₀(ν)，s₀(ν) = 4√W(L)/(Γ(1+m+ν)m!)·ω^{2m+1+ν}·L^{1+2ν}·a₀(L)²"""
    _check_route(route)
    if domain.kind != RADIAL or not mode.radial:
        raise ValidationError("shift_leading_radial 需要径向区间与径向模式")
    m, nu = mode.m, mode.nu
    if route == NORMALIZED:
        w, domain, h = normalize_to_unit_curvature(w, domain, mode.h)
        omega = 1.0
    else:
        h = mode.h
        omega = w.curvature_omega
    length = domain.r_plus
    phi = agmon_distance(w, length)
    a0 = prefactor_a0_radial(w, m, nu, length)
    log_s0 = (math.log(4.0) + 0.5 * math.log(w.evaluate(length)) - log_gamma(1.0 + m + nu) - log_factorial(m)
              + (2 * m + 1 + nu) * math.log(omega) + (1.0 + 2.0 * nu) * math.log(length) + 2.0 * math.log(a0))
    exponent = 2.0 * phi / h
    total_log = (-nu - 2 * m) * math.log(h) - exponent + log_s0
    return ShiftPrediction(_safe_exp(total_log), total_log, exponent, -nu - 2.0 * m)


def shift_leading(p: PotentialSpec, domain: ConfinementDomain, mode: ModeSpec,
                  route: str = NORMALIZED) -> ShiftPrediction:
    if mode.radial:
        return shift_leading_radial(p, domain, mode, route)
    return shift_leading_line(p, domain, mode, route)


# ---------------------------------------------------------------------------
# 闭式推论
# ---------------------------------------------------------------------------

def ho_shift(mode: ModeSpec, R: float) -> ShiftPrediction:
    """V = x², Ω = (−R, R)：h^{½−m}·2^{m+2}/(m!√π)·R^{2m+1}·e^{−R²/h}"""
    if mode.radial:
        raise ValidationError("ho_shift 只适用于直线模式")
    if R <= 0:
        raise ValidationError(f"R 必须为正: {R}")
    m, h = mode.m, mode.h
    if h / (R * R) >= 1.0:
        logger.warning("h/R² = %.3g ≥ 1，闭式位移超出渐近适用范围", h / (R * R))
    exponent = R * R / h
    log_value = ((0.5 - m) * math.log(h) + (m + 2) * math.log(2.0) - log_factorial(m) - _LOG_SQRT_PI
                 + (2 * m + 1) * math.log(R) - exponent)
    half = log_value - math.log(2.0)
    return ShiftPrediction(_safe_exp(log_value), log_value, exponent, 0.5 - m,
                           (_safe_exp(half), _safe_exp(half)), (half, half))


def ho_confined_closed_form(mode: ModeSpec, R: float) -> float:
    """λ = (2m+1)h + 位移"""
    return (2 * mode.m + 1) * mode.h + ho_shift(mode, R).leading_value


def iso_ho_shift(mode: ModeSpec, L: float) -> ShiftPrediction:
    """W = x²，盒子 (0, L)：4h^{−2m−ν}L^{2(2m+1+ν)}/(m!Γ(1+m+ν))·e^{−L²/h}"""
    if not mode.radial:
        raise ValidationError("iso_ho_shift 需要 ν")
    if L <= 0:
        raise ValidationError(f"L 必须为正: {L}")
    m, h, nu = mode.m, mode.h, mode.nu
    if h / (L * L) >= 1.0:
        logger.warning("h/L² = %.3g ≥ 1，闭式位移超出渐近适用范围", h / (L * L))
    exponent = L * L / h
    log_value = (math.log(4.0) + (-2 * m - nu) * math.log(h) + 2.0 * (2 * m + 1 + nu) * math.log(L)
                 - log_factorial(m) - log_gamma(1.0 + m + nu) - exponent)
    return ShiftPrediction(_safe_exp(log_value), log_value, exponent, -nu - 2.0 * m)


def iso_ho_confined_closed_form(mode: ModeSpec, L: float) -> float:
    """λ = 2(2m+1+ν)h + 位移"""
    return 2.0 * (2 * mode.m + 1 + mode.nu) * mode.h + iso_ho_shift(mode, L).leading_value


def _check_hydrogen(n: int, ell: int):
    if ell < 0 or n < ell + 1:
        raise ValidationError(f"需要 n ≥ ell + 1，实际 n = {n}, ell = {ell}")


def hydrogen_shift(n: int, ell: int, Z: float, h: float, R: float) -> ShiftPrediction:
    """2^{2n+1}h^{−4n−2}R^{2n}/(n^{2n+3}(n−ℓ−1)!(n+ℓ)!)·(2/Z)^{−2n−2}·e^{−ZR/(nh²)}"""
    _check_hydrogen(n, ell)
    if h * h / R >= 1.0:
        logger.warning("h²/R = %.3g ≥ 1，闭式位移超出渐近适用范围", h * h / R)
    exponent = Z * R / (n * h * h)
    log_value = ((2 * n + 1) * math.log(2.0) + (-4 * n - 2) * math.log(h) + 2 * n * math.log(R)
                 - (2 * n + 3) * math.log(n) - log_factorial(n - ell - 1) - log_factorial(n + ell)
                 + (2 * n + 2) * math.log(Z / 2.0) - exponent)
    return ShiftPrediction(_safe_exp(log_value), log_value, exponent, -4.0 * n - 2.0)


def hydrogen_confined_closed_form(spec) -> float:
    """E_n(R) ≈ −Z²/(4n²h²) + 位移

    Args:
        spec: HydrogenSpec

    Raises:
        ValidationError: n < ℓ+1
    """
    _check_hydrogen(spec.n, spec.ell)
    unconfined = -spec.Z ** 2 / (4.0 * spec.n ** 2 * spec.h ** 2)
    return unconfined + hydrogen_shift(spec.n, spec.ell, spec.Z, spec.h, spec.R).leading_value


def hydrogen_k_closed_form(n: int, ell: int, h: float, R: float) -> float:
    """Z = 2 时的 k(R) = nh + 2^{2n}h^{1−4n}R^{2n}/(n^{2n}(n−ℓ−1)!(n+ℓ)!)·e^{−2R/(nh²)}"""
    _check_hydrogen(n, ell)
    log_delta = (2 * n * math.log(2.0) + (1 - 4 * n) * math.log(h) + 2 * n * math.log(R)
                 - 2 * n * math.log(n) - log_factorial(n - ell - 1) - log_factorial(n + ell)
                 - 2.0 * R / (n * h * h))
    return n * h + math.exp(log_delta)


def energy_shift_from_k(k: float, n: int, h: float, Z: float = 2.0) -> float:
    """由 k 换算 E(R) − E_n = (Z²/4)(1/(nh)² − 1/k²)

    δ = k − nh 很小时直接相减会丢失精度，这里用 log1p / expm1。
    """
    base = n * h
    delta = k - base
    return -(Z * Z / 4.0) * base ** -2 * math.expm1(-2.0 * math.log1p(delta / base))


# ---------------------------------------------------------------------------
# 其它
# ---------------------------------------------------------------------------

def endpoint_crossover(p: PotentialSpec, domain: ConfinementDomain, mode: ModeSpec,
                       h_grid: Sequence[float]) -> Optional[float]:
    """φ 较小的端点在所有不超过返回值的 h 上都占主导

    返回网格中满足条件的最大 h；最小的 h 都不满足时返回 None。
    """
    if domain.kind != LINE:
        raise ValidationError("endpoint_crossover 只适用于直线区间")
    phi_minus = agmon_distance(p, domain.r_minus)
    phi_plus = agmon_distance(p, domain.r_plus)
    dominant = 0 if phi_minus < phi_plus else 1
    crossover = None
    for h in sorted(h_grid):
        prediction = shift_leading_line(p, domain, mode.with_h(h), route=DIRECT)
        logs = prediction.per_endpoint_log
        if logs[dominant] > logs[1 - dominant]:
            crossover = h
        else:
            break
    return crossover


def leading_norm_line(m: int) -> float:
    """N₀ = √(2^{−m} m! √π)"""
    return math.sqrt(math.exp(-m * math.log(2.0) + log_factorial(m) + _LOG_SQRT_PI))


def leading_norm_radial(m: int, nu: float) -> float:
    """N₀(ν) = √(Γ(1+m+ν) m!/2)"""
    return math.sqrt(math.exp(log_gamma(1.0 + m + nu) + log_factorial(m) - math.log(2.0)))
