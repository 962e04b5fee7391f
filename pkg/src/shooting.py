"""
打靶法求解器

从 x = 0 向外积分 −h²u'' + V u = λu，边界值 G±(λ, β) = u(r±) 及其对 (λ, β) 的偏导
由变分方程一起积分得到。解的模超过 e^{40} 或低于 e^{-40} 时整体重标度，
累计的对数尺度另行记录，因此 e^{±φ/h} 量级的解不会溢出。
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp

from .exceptions import (
    ConvergenceError,
    EvaluationError,
    IntegrationError,
    ModeMismatchError,
    SeriesConvergenceError,
    SingularJacobianError,
    ValidationError,
)
from .potentials import LINE, ConfinementDomain, PotentialSpec
from .scaled import ScaledValue

logger = logging.getLogger(__name__)

RESCALE_EXPONENT = 40.0
GROW_LIMIT = math.exp(RESCALE_EXPONENT)
SHRINK_LIMIT = math.exp(-RESCALE_EXPONENT)
MAX_RESTARTS = 10000
ATOL_FACTOR = 1e-20
MIN_TRACE_SAMPLES = 64

DEFAULT_INTEGRATE_TOL = 1e-12
DEFAULT_NEWTON_TOL = 1e-10
DEFAULT_MAX_ITERATIONS = 50
DEFAULT_CONDITION_LIMIT = 1e12

MAX_SERIES_TERMS = 40
SERIES_TAYLOR_TERMS = 5
ENDPOINT_EXCLUSION = 1e-3

REFRESHED = "refreshed"
FROZEN = "frozen"
NEWTON_VARIANTS = (REFRESHED, FROZEN)


# ---------------------------------------------------------------------------
# 数据类型
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModeSpec:
    """量子数 m、半经典参数 h，径向情形另有 ν"""

    m: int
    h: float
    nu: Optional[float] = None

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 0:
            raise ValidationError(f"m 必须为非负整数: {self.m}")
        if not (math.isfinite(self.h) and self.h > 0):
            raise ValidationError(f"h 必须为正: {self.h}")
        if self.nu is not None and not (math.isfinite(self.nu) and self.nu > 0):
            raise ValidationError(f"ν 必须为正: {self.nu}")

    @property
    def radial(self) -> bool:
        return self.nu is not None

    def with_h(self, h: float) -> "ModeSpec":
        return ModeSpec(self.m, h, self.nu)


@dataclass(frozen=True)
class ShootState:
    """位置 x 处的 (u, u')，两者共用一个对数尺度"""

    x: float
    u_mantissa: float
    du_mantissa: float
    log_scale: float = 0.0

    @classmethod
    def initial(cls, x: float, u: float, du: float) -> "ShootState":
        return cls(x, float(u), float(du), 0.0)

    @property
    def u(self) -> ScaledValue:
        return ScaledValue.normalized(self.u_mantissa, self.log_scale)

    @property
    def du(self) -> ScaledValue:
        return ScaledValue.normalized(self.du_mantissa, self.log_scale)


@dataclass(frozen=True)
class BoundaryMap:
    """边界值与 Jacobian

    jacobian 按行缩放：真实的 J[i, j] = jacobian[i, j]·exp(row_log_scales[i])，
    与 values[i] 使用同一行尺度。
    """

    values: Tuple[ScaledValue, ...]
    jacobian: np.ndarray
    row_log_scales: Tuple[float, ...]
    residual_mantissas: Tuple[float, ...]
    steps: int = 0
    traces: Tuple[Tuple[np.ndarray, np.ndarray], ...] = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        if not np.all(np.isfinite(self.jacobian)):
            raise IntegrationError("Jacobian 出现非有限值", float("nan"))

    def condition(self) -> float:
        """行列均衡后的条件数"""
        return equilibrated_condition(self.jacobian)

    def entry(self, i: int, j: int) -> ScaledValue:
        return ScaledValue.normalized(float(self.jacobian[i, j]), self.row_log_scales[i])


@dataclass(frozen=True)
class LineSolution:
    lambda_star: float
    beta_star: float
    iterations: int
    condition: float
    steps: int
    sign_changes: int
    variant: str = REFRESHED


@dataclass(frozen=True)
class RadialSolution:
    lambda_star: float
    iterations: int
    steps: int
    sign_changes: int
    x_start: float
    variant: str = REFRESHED


@dataclass
class _Shot:
    y: np.ndarray
    log_scale: float
    xs: np.ndarray
    us: np.ndarray
    steps: int


# ---------------------------------------------------------------------------
# 积分器
# ---------------------------------------------------------------------------

def _check_integrate_tol(tol: float):
    if not (1e-13 <= tol <= 1e-6):
        raise ValidationError(f"积分容差需在 [1e-13, 1e-6] 内，实际为 {tol!r}")


def _scalar_potential(p: PotentialSpec) -> Callable[[float], float]:
    def value(x: float) -> float:
        try:
            v = float(p.evaluate(x))
        except EvaluationError as e:
            raise IntegrationError(f"势函数求值失败: {e}", x) from e
        if not math.isfinite(v):
            raise IntegrationError("势函数值非有限", x)
        return v
    return value


def effective_potential(p: PotentialSpec, h: float, nu: Optional[float] = None) -> Callable[[float], float]:
    """直线情形为 V，径向情形为 W + h²(ν²−1/4)/x²"""
    base = _scalar_potential(p)
    if nu is None:
        return base
    centrifugal = h * h * (nu * nu - 0.25)

    def value(x: float) -> float:
        return base(x) + centrifugal / (x * x)
    return value


def coulomb_potential(ell: int, Z: float, h: float) -> Callable[[float], float]:
    """h²ℓ(ℓ+1)/y² − Z/y"""
    centrifugal = h * h * ell * (ell + 1)

    def value(y: float) -> float:
        return centrifugal / (y * y) - Z / y
    return value


def _shoot(rhs, y0: Sequence[float], x0: float, x1: float, tol: float, log_scale: float = 0.0) -> _Shot:
    """积分线性齐次系统，越界时整体重标度并重新启动"""
    y = np.asarray(y0, dtype=float)
    x = float(x0)
    xs: List[np.ndarray] = []
    us: List[np.ndarray] = []
    steps = 0
    max_step = abs(x1 - x0) / MIN_TRACE_SAMPLES

    def grow(_, state):
        return np.max(np.abs(state)) - GROW_LIMIT
    grow.terminal = True
    grow.direction = 1

    def shrink(_, state):
        return np.max(np.abs(state)) - SHRINK_LIMIT
    shrink.terminal = True
    shrink.direction = -1

    for _ in range(MAX_RESTARTS):
        sol = solve_ivp(rhs, (x, x1), y, method="DOP853", rtol=tol, atol=tol * ATOL_FACTOR,
                        events=(grow, shrink), max_step=max_step)
        steps += max(len(sol.t) - 1, 0)
        xs.append(sol.t)
        us.append(sol.y[0])
        if sol.status == -1:
            raise IntegrationError(f"积分失败: {sol.message}", float(sol.t[-1]))
        if sol.status == 1:
            hits = [i for i, t in enumerate(sol.t_events) if len(t)]
            event = hits[0]
            x = float(sol.t_events[event][0])
            state = np.asarray(sol.y_events[event][0], dtype=float)
            factor = float(np.max(np.abs(state)))
            y = state / factor
            log_scale += math.log(factor)
            if x == x1:
                break
            continue
        y = sol.y[:, -1]
        break
    else:
        raise IntegrationError("重标度次数超过上限", x)

    if not np.all(np.isfinite(y)):
        raise IntegrationError("解出现非有限值", x1)
    return _Shot(y, log_scale, np.concatenate(xs), np.concatenate(us), steps)


def integrate_traced(p: PotentialSpec, lam: float, start: ShootState, to_x: float, h: float,
                     tol: float = DEFAULT_INTEGRATE_TOL,
                     nu: Optional[float] = None) -> Tuple[ShootState, np.ndarray, np.ndarray]:
    """与 integrate 相同，另外返回积分轨迹 (x, u) 供节点计数"""
    _check_integrate_tol(tol)
    if nu is not None and min(start.x, to_x) <= 0.0:
        raise ValidationError("径向方程只能在 x > 0 上积分")
    potential = effective_potential(p, h, nu)
    h2 = h * h

    def rhs(x, y):
        f = (potential(x) - lam) / h2
        return [y[1], f * y[0]]

    if to_x == start.x:
        return start, np.array([start.x]), np.array([start.u_mantissa])
    shot = _shoot(rhs, (start.u_mantissa, start.du_mantissa), start.x, to_x, tol, start.log_scale)
    state = ShootState(float(to_x), float(shot.y[0]), float(shot.y[1]), shot.log_scale)
    return state, shot.xs, shot.us


def integrate(p: PotentialSpec, lam: float, start: ShootState, to_x: float, h: float,
              tol: float = DEFAULT_INTEGRATE_TOL, nu: Optional[float] = None) -> ShootState:
    """从 start 积分到 to_x

    Args:
        p: 势函数（径向情形给出 nu，自动加上离心项）
        lam: 谱参数 λ
        start: 初始状态
        to_x: 终点
        h: 半经典参数
        tol: 相对容差，[1e-13, 1e-6]

    Returns:
        ShootState: 终点处的 (u, u')

    Raises:
        IntegrationError: 步长下溢或势函数值非有限
    """
    state, _, _ = integrate_traced(p, lam, start, to_x, h, tol, nu)
    return state


def count_sign_changes(values: Sequence[float]) -> int:
    """符号变化次数，忽略零值"""
    signs = np.sign(np.asarray(values, dtype=float))
    signs = signs[signs != 0]
    if signs.size < 2:
        return 0
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


def node_window(xs: np.ndarray, us: np.ndarray, x_start: float, x_end: float,
                potential: Callable[[float], float], lam: float) -> np.ndarray:
    """参与节点计数的样本：截到最外侧的经典允许点 V(x) ≤ λ 之后一个样本

    禁区内 u'' = f·u 且 f > 0，本征函数在禁区与壁之间没有零点；
    那里的增长解由积分误差激发，符号不可信。
    """
    interior = np.abs(xs - x_end) > ENDPOINT_EXCLUSION * abs(x_end - x_start)
    xs, us = xs[interior], us[interior]
    allowed = np.flatnonzero([potential(float(x)) <= lam for x in xs])
    if allowed.size == 0:
        return us[:1]
    return us[:allowed[-1] + 2]


def wronskian(p: PotentialSpec, lam: float, h: float, first: ShootState, second: ShootState,
              points: Sequence[float], tol: float = DEFAULT_INTEGRATE_TOL,
              nu: Optional[float] = None) -> List[ScaledValue]:
    """两个解在各点处的 h²·W(u, v) = h²(u v' − u' v)"""
    if first.x != second.x:
        raise ValidationError("两个解的起点必须相同")
    results = []
    for x in points:
        a = integrate(p, lam, first, x, h, tol, nu)
        b = integrate(p, lam, second, x, h, tol, nu)
        w = a.u * b.du - a.du * b.u
        results.append(w * (h * h))
    return results


# ---------------------------------------------------------------------------
# 边界映射
# ---------------------------------------------------------------------------

def _line_initial(m: int, beta: float) -> List[float]:
    """[u, u', ∂λu, ∂λu', ∂βu, ∂βu'] 在 x = 0 处的值"""
    if m % 2 == 0:
        return [1.0, beta, 0.0, 0.0, 0.0, 1.0]
    return [beta, 1.0, 0.0, 0.0, 1.0, 0.0]


def boundary_map_line(p: PotentialSpec, domain: ConfinementDomain, mode: ModeSpec, lam: float,
                      beta: float, tol: float = DEFAULT_INTEGRATE_TOL) -> BoundaryMap:
    """G±(λ, β) = u(r±) 及 2×2 Jacobian

    偶数 m 取 (u(0), u'(0)) = (1, β)，奇数 m 取 (β, 1)。
    """
    _check_integrate_tol(tol)
    if domain.kind != LINE:
        raise ValidationError("boundary_map_line 需要直线区间")
    potential = effective_potential(p, mode.h)
    h2 = mode.h * mode.h

    def rhs(x, y):
        f = (potential(x) - lam) / h2
        return [y[1], f * y[0], y[3], f * y[2] - y[0] / h2, y[5], f * y[4]]

    y0 = _line_initial(mode.m, beta)
    values, rows, scales, residuals, traces = [], [], [], [], []
    steps = 0
    for end in (domain.r_plus, domain.r_minus):
        shot = _shoot(rhs, y0, 0.0, end, tol)
        steps += shot.steps
        values.append(ScaledValue.normalized(float(shot.y[0]), shot.log_scale))
        residuals.append(float(shot.y[0]))
        rows.append([shot.y[2], shot.y[4]])
        scales.append(shot.log_scale)
        traces.append((shot.xs, shot.us))
    return BoundaryMap(tuple(values), np.asarray(rows, dtype=float), tuple(scales),
                       tuple(residuals), steps, tuple(traces))


def default_radial_start(w: PotentialSpec, mode: ModeSpec, length: float) -> float:
    """x_start = min(0.05·√(h/ω), L/100)"""
    return min(0.05 * math.sqrt(mode.h / w.curvature_omega), length / 100.0)


def _radial_series(w: PotentialSpec, mode: ModeSpec, lam: float, x_start: float):
    """u = x^{1/2+ν} Σ c_k x^{2k} 及其对 λ 的导数

    返回 (u, u', ∂λu, ∂λu') 的尾数与共同对数尺度 (1/2+ν)·log x。
    """
    nu, h2 = mode.nu, mode.h * mode.h
    s = 0.5 + nu
    taylor = w.taylor_coefficients(SERIES_TAYLOR_TERMS)
    q = [-lam] + [float(c) for c in taylor[1:]]
    x2 = x_start * x_start

    c, dc = [1.0], [0.0]
    sums = np.zeros(4)
    sums[0], sums[1] = 1.0, s / x_start
    power = 1.0
    for k in range(1, MAX_SERIES_TERMS + 1):
        denominator = 4.0 * h2 * k * (k + nu)
        ck = sum(q[j] * c[k - 1 - j] for j in range(min(k, len(q)))) / denominator
        dck = (sum(q[j] * dc[k - 1 - j] for j in range(min(k, len(q)))) - c[k - 1]) / denominator
        c.append(ck)
        dc.append(dck)
        power *= x2
        terms = np.array([
            ck * power,
            ck * (s + 2 * k) * power / x_start,
            dck * power,
            dck * (s + 2 * k) * power / x_start,
        ])
        sums += terms
        if k >= 2 and abs(terms[0]) <= 1e-16 * abs(sums[0]) and abs(terms[2]) <= 1e-16 * max(abs(sums[2]), 1e-300):
            return sums, s * math.log(x_start)
    raise SeriesConvergenceError(
        f"Frobenius 级数在 {MAX_SERIES_TERMS} 项内未收敛 (x_start = {x_start!r})，请减小 x_start"
    )


def _check_radial_start(w: PotentialSpec, mode: ModeSpec, x_start: float):
    if mode.nu is None:
        raise ValidationError("Frobenius 起点需要径向 ModeSpec")
    limit = 0.1 * math.sqrt(mode.h / w.curvature_omega)
    if not (0.0 < x_start <= limit):
        raise ValidationError(f"x_start 需在 (0, {limit!r}] 内，实际为 {x_start!r}")


def frobenius_start(w: PotentialSpec, mode: ModeSpec, lam: float, x_start: float) -> ShootState:
    """在 x_start 处由 Frobenius 级数给出 (u, u')

    Raises:
        ValidationError: x_start 超出谐振子核心 0.1·√(h/ω)
        SeriesConvergenceError: 40 项内未收敛
    """
    _check_radial_start(w, mode, x_start)
    sums, log_scale = _radial_series(w, mode, lam, x_start)
    return ShootState(x_start, float(sums[0]), float(sums[1]), log_scale)


def boundary_map_radial(w: PotentialSpec, length: float, mode: ModeSpec, lam: float,
                        tol: float = DEFAULT_INTEGRATE_TOL, x_start: Optional[float] = None) -> BoundaryMap:
    """G(λ) = u_λ(L) 与 ∂λG"""
    _check_integrate_tol(tol)
    if mode.nu is None:
        raise ValidationError("boundary_map_radial 需要径向 ModeSpec")
    x_start = default_radial_start(w, mode, length) if x_start is None else x_start
    _check_radial_start(w, mode, x_start)
    sums, log_scale = _radial_series(w, mode, lam, x_start)
    potential = effective_potential(w, mode.h, mode.nu)
    h2 = mode.h * mode.h

    def rhs(x, y):
        f = (potential(x) - lam) / h2
        return [y[1], f * y[0], y[3], f * y[2] - y[0] / h2]

    shot = _shoot(rhs, sums, x_start, length, tol, log_scale)
    value = ScaledValue.normalized(float(shot.y[0]), shot.log_scale)
    return BoundaryMap((value,), np.asarray([[shot.y[2]]], dtype=float), (shot.log_scale,),
                       (float(shot.y[0]),), shot.steps, ((shot.xs, shot.us),))


def default_hydrogen_start(Z: float, h: float, radius: float) -> float:
    """y_start = min(0.01·h²/Z, R/100)"""
    return min(0.01 * h * h / Z, radius / 100.0)


def _hydrogen_series(ell: int, Z: float, h: float, energy: float, y_start: float):
    """f = y^{ℓ+1} Σ d_k y^k 及其对 E 的导数"""
    h2 = h * h
    d, dd = [1.0], [0.0]
    sums = np.array([1.0, (ell + 1) / y_start, 0.0, 0.0])
    power = 1.0
    for k in range(1, MAX_SERIES_TERMS + 1):
        denominator = h2 * k * (k + 2 * ell + 1)
        prev2 = d[k - 2] if k >= 2 else 0.0
        dprev2 = dd[k - 2] if k >= 2 else 0.0
        dk = (-Z * d[k - 1] - energy * prev2) / denominator
        ddk = (-Z * dd[k - 1] - energy * dprev2 - prev2) / denominator
        d.append(dk)
        dd.append(ddk)
        power *= y_start
        order = ell + 1 + k
        terms = np.array([dk * power, dk * order * power / y_start,
                          ddk * power, ddk * order * power / y_start])
        sums += terms
        if k >= 3 and abs(terms[0]) <= 1e-16 * abs(sums[0]) and abs(terms[2]) <= 1e-16 * max(abs(sums[2]), 1e-300):
            return sums, (ell + 1) * math.log(y_start)
    raise SeriesConvergenceError(
        f"库仑 Frobenius 级数在 {MAX_SERIES_TERMS} 项内未收敛 (y_start = {y_start!r})"
    )


def boundary_map_hydrogen(ell: int, Z: float, h: float, radius: float, energy: float,
                          tol: float = DEFAULT_INTEGRATE_TOL, y_start: Optional[float] = None) -> BoundaryMap:
    """库仑径向方程在 y = R 处的边界值与 ∂E"""
    _check_integrate_tol(tol)
    y_start = default_hydrogen_start(Z, h, radius) if y_start is None else y_start
    sums, log_scale = _hydrogen_series(ell, Z, h, energy, y_start)
    potential = coulomb_potential(ell, Z, h)
    h2 = h * h

    def rhs(y, state):
        f = (potential(y) - energy) / h2
        return [state[1], f * state[0], state[3], f * state[2] - state[0] / h2]

    shot = _shoot(rhs, sums, y_start, radius, tol, log_scale)
    value = ScaledValue.normalized(float(shot.y[0]), shot.log_scale)
    return BoundaryMap((value,), np.asarray([[shot.y[2]]], dtype=float), (shot.log_scale,),
                       (float(shot.y[0]),), shot.steps, ((shot.xs, shot.us),))


# ---------------------------------------------------------------------------
# Newton 迭代
# ---------------------------------------------------------------------------

def equilibrated_condition(matrix: np.ndarray) -> float:
    """行列按最大元素缩放后的 2-范数条件数"""
    a = np.asarray(matrix, dtype=float)
    row = np.max(np.abs(a), axis=1)
    if np.any(row == 0):
        return math.inf
    a = a / row[:, None]
    col = np.max(np.abs(a), axis=0)
    if np.any(col == 0):
        return math.inf
    return float(np.linalg.cond(a / col[None, :]))


def _solve_row_scaled(jacobian: np.ndarray, rhs: np.ndarray, condition_limit: float) -> Tuple[np.ndarray, float]:
    row = np.max(np.abs(jacobian), axis=1)
    if np.any(row == 0) or not np.all(np.isfinite(rhs)):
        raise SingularJacobianError("Jacobian 奇异，请检查区间与模式", math.inf)
    a = jacobian / row[:, None]
    b = rhs / row
    col = np.max(np.abs(a), axis=0)
    if np.any(col == 0):
        raise SingularJacobianError("Jacobian 奇异，请检查区间与模式", math.inf)
    a = a / col[None, :]
    try:
        condition = float(np.linalg.cond(a))
    except np.linalg.LinAlgError as e:
        raise SingularJacobianError(f"Jacobian 条件数无法计算: {e}", math.inf) from e
    if not math.isfinite(condition) or condition > condition_limit:
        raise SingularJacobianError(
            f"Jacobian 条件数 {condition:.3e} 超过上限 {condition_limit:.1e}，请检查区间与模式", condition
        )
    try:
        return np.linalg.solve(a, b) / col, condition
    except np.linalg.LinAlgError as e:
        raise SingularJacobianError(f"Jacobian 奇异: {e}", condition) from e


def _clamp(step: float, limit: float, what: str) -> Tuple[float, bool]:
    if abs(step) > limit:
        logger.warning("Newton 步长被截断: %s 步长 %.3e 超过 %.3e", what, step, limit)
        return math.copysign(limit, step), True
    return step, False


def _check_variant(variant: str):
    if variant not in NEWTON_VARIANTS:
        raise ValidationError(f"未知的 Newton 变体: {variant}，可选 {NEWTON_VARIANTS}")


def _relative_rows(values: Tuple[float, ...], scales: Tuple[float, ...], reference: Tuple[float, ...]) -> np.ndarray:
    """把当前行尺度的尾数换算到参考行尺度"""
    out = []
    for mantissa, scale, ref in zip(values, scales, reference):
        gap = scale - ref
        if gap > 700.0:
            raise ConvergenceError("冻结 Jacobian 迭代发散", 0)
        out.append(mantissa * math.exp(gap))
    return np.asarray(out)


def newton_solve_line(p: PotentialSpec, domain: ConfinementDomain, mode: ModeSpec,
                      lambda0: Optional[float] = None, beta0: float = 0.0,
                      tol: float = DEFAULT_NEWTON_TOL, integrate_tol: float = DEFAULT_INTEGRATE_TOL,
                      variant: str = REFRESHED, max_iterations: int = DEFAULT_MAX_ITERATIONS,
                      condition_limit: float = DEFAULT_CONDITION_LIMIT) -> LineSolution:
    """求解 G(λ, β) = 0

    refreshed 每步重算 Jacobian；frozen 固定使用初值处的 Jacobian。
    收敛判据 |Δλ| ≤ tol·h 且 |Δβ| ≤ tol，λ 步长不超过 ωh/2。

    Returns:
        LineSolution: λ^Ω、β、迭代次数等

    Raises:
        ConvergenceError: 超过最大迭代次数
        SingularJacobianError: 条件数超过上限
        ModeMismatchError: 收敛后的本征函数节点数不等于 m
    """
    _check_variant(variant)
    omega = p.curvature_omega
    lam = omega * (2 * mode.m + 1) * mode.h if lambda0 is None else float(lambda0)
    beta = float(beta0)
    step_limit = 0.5 * omega * mode.h
    frozen_jacobian, frozen_scales = None, None
    condition = math.nan
    steps = 0

    for iteration in range(1, max_iterations + 1):
        bmap = boundary_map_line(p, domain, mode, lam, beta, integrate_tol)
        steps += bmap.steps
        residual = np.asarray(bmap.residual_mantissas)
        if variant == FROZEN:
            if frozen_jacobian is None:
                frozen_jacobian, frozen_scales = bmap.jacobian, bmap.row_log_scales
            residual = _relative_rows(bmap.residual_mantissas, bmap.row_log_scales, frozen_scales)
            jacobian = frozen_jacobian
        else:
            jacobian = bmap.jacobian
        delta, condition = _solve_row_scaled(jacobian, residual, condition_limit)
        d_lam, clamped = _clamp(float(delta[0]), step_limit, "λ")
        d_beta = float(delta[1])
        lam -= d_lam
        beta -= d_beta
        logger.debug("Newton 第 %d 步: λ = %r, β = %r, Δλ = %.3e", iteration, lam, beta, d_lam)
        if not clamped and abs(d_lam) <= tol * mode.h and abs(d_beta) <= tol:
            final = boundary_map_line(p, domain, mode, lam, beta, integrate_tol)
            changes = _line_sign_changes(final, domain, effective_potential(p, mode.h), lam)
            if changes != mode.m:
                raise ModeMismatchError(
                    f"收敛到的本征函数有 {changes} 个节点，期望 {mode.m}", mode.m, changes
                )
            return LineSolution(lam, beta, iteration, condition, steps + final.steps, changes, variant)
    raise ConvergenceError(f"Newton 迭代 {max_iterations} 次未收敛 (λ = {lam!r})", max_iterations)


def _line_sign_changes(bmap: BoundaryMap, domain: ConfinementDomain,
                       potential: Callable[[float], float], lam: float) -> int:
    (xs_right, us_right), (xs_left, us_left) = bmap.traces
    right = node_window(xs_right, us_right, 0.0, domain.r_plus, potential, lam)
    left = node_window(xs_left, us_left, 0.0, domain.r_minus, potential, lam)
    return count_sign_changes(np.concatenate([left[::-1], right[1:]]))


def _scalar_newton(evaluate: Callable[[float], BoundaryMap], start: float, scale: float, step_limit: float,
                   tol: float, variant: str, max_iterations: int, label: str):
    """标量 Newton 迭代，返回 (根, 迭代次数, 最终边界映射, 积分步数)"""
    _check_variant(variant)
    value = start
    frozen = None
    steps = 0
    for iteration in range(1, max_iterations + 1):
        bmap = evaluate(value)
        steps += bmap.steps
        derivative = bmap.entry(0, 0)
        if variant == FROZEN:
            if frozen is None:
                frozen = derivative
            derivative = frozen
        if derivative.is_zero:
            raise SingularJacobianError(f"{label}: ∂G 为零，请检查区间与模式", math.inf)
        raw = (bmap.values[0] / derivative).to_float()
        if not math.isfinite(raw):
            raise ConvergenceError(f"{label}: Newton 步长非有限", iteration)
        step, clamped = _clamp(raw, step_limit, label)
        value -= step
        logger.debug("%s Newton 第 %d 步: %r (Δ = %.3e)", label, iteration, value, step)
        if not clamped and abs(step) <= tol * scale:
            final = evaluate(value)
            return value, iteration, final, steps + final.steps
    raise ConvergenceError(f"{label}: Newton 迭代 {max_iterations} 次未收敛 ({value!r})", max_iterations)


def newton_solve_radial(w: PotentialSpec, length: float, mode: ModeSpec, lambda0: Optional[float] = None,
                        tol: float = DEFAULT_NEWTON_TOL, integrate_tol: float = DEFAULT_INTEGRATE_TOL,
                        variant: str = REFRESHED, max_iterations: int = DEFAULT_MAX_ITERATIONS,
                        x_start: Optional[float] = None) -> RadialSolution:
    """径向问题 G(λ) = u_λ(L) = 0 的标量 Newton 迭代，λ 步长不超过 ωh"""
    if mode.nu is None:
        raise ValidationError("newton_solve_radial 需要 ν")
    omega = w.curvature_omega
    x_start = default_radial_start(w, mode, length) if x_start is None else x_start
    guess = 2.0 * omega * (2 * mode.m + 1 + mode.nu) * mode.h if lambda0 is None else float(lambda0)
    lam, iterations, final, steps = _scalar_newton(
        lambda value: boundary_map_radial(w, length, mode, value, integrate_tol, x_start),
        guess, mode.h, omega * mode.h, tol, variant, max_iterations, "λ",
    )
    xs, us = final.traces[0]
    changes = count_sign_changes(
        node_window(xs, us, x_start, length, effective_potential(w, mode.h, mode.nu), lam))
    if changes != mode.m:
        raise ModeMismatchError(f"收敛到的本征函数有 {changes} 个节点，期望 {mode.m}", mode.m, changes)
    return RadialSolution(lam, iterations, steps, changes, x_start, variant)


def newton_solve_hydrogen(n: int, ell: int, Z: float, h: float, radius: float,
                          energy0: Optional[float] = None, tol: float = DEFAULT_NEWTON_TOL,
                          integrate_tol: float = DEFAULT_INTEGRATE_TOL, variant: str = REFRESHED,
                          max_iterations: int = DEFAULT_MAX_ITERATIONS) -> RadialSolution:
    """受限氢原子 E_n(R)，步长不超过 |E_{n+1} − E_n|/4"""
    unconfined = -Z * Z / (4.0 * n * n * h * h)
    spacing = abs(-Z * Z / (4.0 * (n + 1) ** 2 * h * h) - unconfined)
    y_start = default_hydrogen_start(Z, h, radius)
    guess = unconfined if energy0 is None else float(energy0)
    energy, iterations, final, steps = _scalar_newton(
        lambda value: boundary_map_hydrogen(ell, Z, h, radius, value, integrate_tol, y_start),
        guess, abs(unconfined), 0.25 * spacing, tol, variant, max_iterations, "E",
    )
    expected = n - ell - 1
    xs, us = final.traces[0]
    changes = count_sign_changes(node_window(xs, us, y_start, radius, coulomb_potential(ell, Z, h), energy))
    if changes != expected:
        raise ModeMismatchError(f"收敛到的本征函数有 {changes} 个节点，期望 {expected}", expected, changes)
    return RadialSolution(energy, iterations, steps, changes, y_start, variant)
