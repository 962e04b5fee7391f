"""
本征值服务：无约束本征值 λ⁰、受限本征值 λ^Ω / λ^Λ、受限氢原子以及有限差分校验
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import brentq

from . import shooting
from .agmon import agmon_distance
from .exceptions import BoxExpansionError, ConvergenceError, OracleError, ValidationError
from .potentials import LINE, RADIAL, ConfinementDomain, PotentialSpec, harmonic_potential
from .shooting import ModeSpec, count_sign_changes

logger = logging.getLogger(__name__)

SHOOTING = "shooting"
FINITE_DIFFERENCE = "finite-difference"
CLOSED_FORM = "closed-form"

# 盒子端点处 e^{−2φ(b)/h} 比参考位移再小 e^{−20}，但不超过双精度可分辨的 e^{−40}
BOX_MARGIN_EXPONENT = 20.0
BOX_RESOLUTION_EXPONENT = 40.0
BOX_GROWTH = 1.25
DEFAULT_MAX_BOX = 1e3
MAX_BOX_STEPS = 8
MIN_GRID = 200
MAX_BRACKET_DOUBLINGS = 20
FROBENIUS_ROW_NU = 1.0


@dataclass(frozen=True)
class Eigenpair:
    index_m: int
    value: float
    method: str
    diagnostics: Dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValidationError(f"本征值非有限: {self.value!r}")


@dataclass(frozen=True)
class HydrogenSpec:
    """受限氢原子 H_R(ℓ; h) = h²D² + h²ℓ(ℓ+1)/y² − Z/y，Dirichlet 于 y = R"""

    n: int
    ell: int
    Z: float
    h: float
    R: float

    def __post_init__(self):
        if int(self.ell) != self.ell or self.ell < 0:
            raise ValidationError(f"ell 必须为非负整数: {self.ell}")
        if int(self.n) != self.n or self.n < self.ell + 1:
            raise ValidationError(f"需要 n ≥ ell + 1，实际 n = {self.n}, ell = {self.ell}")
        for name in ("Z", "h", "R"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValidationError(f"{name} 必须为正: {value}")

    @property
    def unconfined_energy(self) -> float:
        """E_n = −Z²/(4n²h²)"""
        return -self.Z ** 2 / (4.0 * self.n ** 2 * self.h ** 2)

    @property
    def radial_index(self) -> int:
        return self.n - self.ell - 1

    def with_radius(self, R: float) -> "HydrogenSpec":
        return replace(self, R=R)


def _check_kinds(p: PotentialSpec, mode: ModeSpec, domain: Optional[ConfinementDomain] = None):
    expected = RADIAL if mode.radial else LINE
    if domain is not None and domain.kind != expected:
        raise ValidationError(f"区间类型 {domain.kind} 与模式不匹配（需要 {expected}）")
    if p.kind != expected:
        raise ValidationError(f"势函数类型 {p.kind} 与模式不匹配（需要 {expected}）")


def harmonic_eigenvalue(omega: float, mode: ModeSpec) -> float:
    """谐振子近似：ω(2m+1)h，径向 2ω(2m+1+ν)h"""
    if mode.radial:
        return 2.0 * omega * (2 * mode.m + 1 + mode.nu) * mode.h
    return omega * (2 * mode.m + 1) * mode.h


def _box_lower_bound(domain: ConfinementDomain, mode: ModeSpec) -> float:
    """V ≥ 0 时本征值的下界（纯盒子 Dirichlet 本征值）"""
    h2 = mode.h * mode.h
    if domain.kind == RADIAL:
        bessel_zero = (mode.m + 1 + 0.5 * mode.nu - 0.25) * math.pi
        return 0.9 * h2 * (bessel_zero / domain.r_plus) ** 2
    return h2 * ((mode.m + 1) * math.pi / domain.length) ** 2


def confined_eigenvalue(p: PotentialSpec, domain: ConfinementDomain, mode: ModeSpec,
                        integrate_tol: float = shooting.DEFAULT_INTEGRATE_TOL,
                        newton_tol: float = shooting.DEFAULT_NEWTON_TOL,
                        variant: str = shooting.REFRESHED,
                        max_iterations: int = shooting.DEFAULT_MAX_ITERATIONS,
                        condition_limit: float = shooting.DEFAULT_CONDITION_LIMIT) -> Eigenpair:
    """受限本征值 λ^Ω_m（直线）或 λ^Λ_m（径向）

    初值取谐振子近似与纯盒子本征值中较大者，两者都不超过真实本征值。
    """
    _check_kinds(p, mode, domain)
    guess = max(harmonic_eigenvalue(p.curvature_omega, mode), _box_lower_bound(domain, mode))
    if mode.radial:
        solution = shooting.newton_solve_radial(
            p, domain.r_plus, mode, guess, newton_tol, integrate_tol, variant, max_iterations
        )
        diagnostics = {"iterations": solution.iterations, "steps": solution.steps,
                       "x_start": solution.x_start, "variant": solution.variant}
    else:
        solution = shooting.newton_solve_line(
            p, domain, mode, guess, 0.0, newton_tol, integrate_tol, variant, max_iterations, condition_limit
        )
        diagnostics = {"iterations": solution.iterations, "steps": solution.steps,
                       "beta": solution.beta_star, "condition": solution.condition,
                       "variant": solution.variant}
    diagnostics["domain"] = domain.describe()
    return Eigenpair(mode.m, solution.lambda_star, SHOOTING, diagnostics)


def _box_for_exponent(p: PotentialSpec, mode: ModeSpec, start: float, target: float, max_box: float) -> float:
    """扩大盒子直到 2φ(b)/h ≥ target（直线情形取两侧较小者）"""
    b = start
    while True:
        if mode.radial:
            phi = agmon_distance(p, b)
        else:
            phi = min(agmon_distance(p, b), agmon_distance(p, -b))
        if 2.0 * phi / mode.h >= target:
            return b
        b *= BOX_GROWTH
        if b > max_box:
            raise BoxExpansionError(
                f"盒子扩张超过上限 {max_box!r}：势函数尾部过浅，无法在 h = {mode.h!r} 下隔离本征值"
            )


def unconfined_eigenvalue(p: PotentialSpec, mode: ModeSpec,
                          reference: Optional[ConfinementDomain] = None,
                          max_box: float = DEFAULT_MAX_BOX,
                          integrate_tol: float = shooting.DEFAULT_INTEGRATE_TOL,
                          newton_tol: float = shooting.DEFAULT_NEWTON_TOL,
                          variant: str = shooting.REFRESHED) -> Eigenpair:
    """无约束本征值 λ⁰_m

    纯谐振子直接返回闭式解。否则在自动扩张的盒子上打靶：盒子满足
    2φ(b)/h ≥ min(参考区间指数 + 20, 40)，且相邻两个盒子的结果一致。
    超过 e^{−40} 的盒子误差已低于 λ 的双精度分辨率。

    Args:
        p: 势函数
        mode: 模式
        reference: 计算位移时对应的受限区间，用来确定期望的位移尺度
        max_box: 盒子半宽上限

    Raises:
        BoxExpansionError: 盒子超过 max_box 仍未满足条件
    """
    _check_kinds(p, mode)
    omega = p.curvature_omega
    if p.harmonic_coefficient is not None:
        value = harmonic_eigenvalue(omega, mode)
        return Eigenpair(mode.m, value, CLOSED_FORM, {"omega": omega})

    reference_exponent = 0.0
    start = math.sqrt(mode.h / omega)
    if reference is not None:
        if reference.kind == RADIAL:
            reference_exponent = 2.0 * agmon_distance(p, reference.r_plus) / mode.h
            start = max(start, reference.r_plus)
        else:
            reference_exponent = 2.0 * min(agmon_distance(p, reference.r_plus),
                                           agmon_distance(p, reference.r_minus)) / mode.h
            start = max(start, reference.r_plus, -reference.r_minus)
    target = min(reference_exponent + BOX_MARGIN_EXPONENT, BOX_RESOLUTION_EXPONENT)
    box = _box_for_exponent(p, mode, start, target, max_box)
    shift_scale = mode.h * math.exp(-reference_exponent) if reference is not None else mode.h

    previous = None
    for _ in range(MAX_BOX_STEPS):
        if box > max_box:
            break
        domain = ConfinementDomain.box(box) if mode.radial else ConfinementDomain.interval(-box, box)
        pair = confined_eigenvalue(p, domain, mode, integrate_tol, newton_tol, variant)
        if previous is not None:
            gap = abs(pair.value - previous.value)
            allowed = max(1e-3 * shift_scale, 1e-11 * abs(pair.value))
            if gap <= allowed:
                diagnostics = dict(pair.diagnostics, box=box, box_gap=gap)
                logger.debug("λ⁰ 在盒子 %r 上收敛: %r", box, pair.value)
                return Eigenpair(mode.m, pair.value, SHOOTING, diagnostics)
            logger.debug("盒子 %r 与上一个盒子相差 %.3e，继续扩张", box, gap)
        previous = pair
        box *= BOX_GROWTH
    raise BoxExpansionError(f"盒子扩张 {MAX_BOX_STEPS} 次（上限 {max_box!r}）后相邻结果仍不一致")


# ---------------------------------------------------------------------------
# 有限差分校验
# ---------------------------------------------------------------------------

def _fd_levels(p: PotentialSpec, domain: ConfinementDomain, mode: ModeSpec, grid_n: int, count: int):
    """一个网格上的最低 count 个本征值，并校验本征向量的节点数"""
    spacing = domain.length / grid_n
    x = domain.r_minus + spacing * np.arange(1, grid_n)
    h2 = mode.h * mode.h
    diagonal = 2.0 * h2 / spacing ** 2 + np.asarray(p.evaluate(x), dtype=float)
    if mode.radial:
        diagonal = diagonal + h2 * (mode.nu ** 2 - 0.25) / (x * x)
        if mode.nu < FROBENIUS_ROW_NU:
            # 首行对 u ~ x^{1/2+ν} 精确：u(2Δ)/u(Δ) = 2^{1/2+ν}
            diagonal[0] = h2 * 2.0 ** (0.5 + mode.nu) / spacing ** 2 + float(p.evaluate(x[0]))
    off = np.full(grid_n - 2, -h2 / spacing ** 2)
    try:
        values, vectors = eigh_tridiagonal(diagonal, off, select="i", select_range=(0, count - 1))
    except np.linalg.LinAlgError as e:
        raise OracleError(f"三对角本征值求解失败 (grid_n = {grid_n}): {e}") from e
    for k in range(count):
        changes = count_sign_changes(vectors[:, k])
        if changes != k:
            raise OracleError(f"网格过粗: 第 {k} 个本征向量有 {changes} 个节点 (grid_n = {grid_n})")
    if np.any(np.diff(values) <= 0):
        raise OracleError(f"网格过粗: 本征值次序不稳定 (grid_n = {grid_n})")
    return values


def fd_oracle(p: PotentialSpec, domain: ConfinementDomain, mode: ModeSpec,
              grid_n: int = 2000, count: int = 3) -> List[Eigenpair]:
    """三对角有限差分 + 网格加倍的 Richardson 外推

    直线情形两端 Dirichlet。径向情形在 L 处 Dirichlet；ν ≥ 1 时 0 处也取 Dirichlet，
    ν < 1 时首行改用 Frobenius 首项的比值条件。ν < 0.5 时仍标记精度下降。

    Returns:
        List[Eigenpair]: 下标 0..count−1 的本征值，严格递增

    Raises:
        OracleError: 网格过粗
    """
    if grid_n < MIN_GRID:
        raise ValidationError(f"grid_n 至少为 {MIN_GRID}，实际为 {grid_n}")
    if count < 1:
        raise ValidationError(f"count 至少为 1，实际为 {count}")
    if mode.radial and domain.kind != RADIAL or not mode.radial and domain.kind != LINE:
        raise ValidationError("区间类型与模式不匹配")
    reduced = bool(mode.radial and mode.nu < 0.5)
    if reduced:
        logger.warning("ν = %r < 0.5：有限差分在 x = 0 附近精度下降", mode.nu)
    coarse = _fd_levels(p, domain, mode, grid_n, count)
    fine = _fd_levels(p, domain, mode, 2 * grid_n, count)
    extrapolated = (4.0 * fine - coarse) / 3.0
    if np.any(np.diff(extrapolated) <= 0):
        raise OracleError("外推后的本征值不再递增，请加密网格")
    return [
        Eigenpair(k, float(extrapolated[k]), FINITE_DIFFERENCE,
                  {"grid_n": grid_n, "coarse": float(coarse[k]), "fine": float(fine[k]),
                   "reduced_accuracy": reduced})
        for k in range(count)
    ]


# ---------------------------------------------------------------------------
# 受限氢原子
# ---------------------------------------------------------------------------

def hydrogen_confined(spec: HydrogenSpec,
                      integrate_tol: float = shooting.DEFAULT_INTEGRATE_TOL,
                      newton_tol: float = shooting.DEFAULT_NEWTON_TOL,
                      variant: str = shooting.REFRESHED) -> Eigenpair:
    """直接对库仑径向方程打靶，0 处取 y^{ℓ+1} 行为，R 处 Dirichlet"""
    solution = shooting.newton_solve_hydrogen(
        spec.n, spec.ell, spec.Z, spec.h, spec.R, None, newton_tol, integrate_tol, variant
    )
    diagnostics = {"iterations": solution.iterations, "steps": solution.steps,
                   "y_start": solution.x_start, "route": "direct"}
    return Eigenpair(spec.radial_index, solution.lambda_star, SHOOTING, diagnostics)


def rescale_hydrogen(spec: HydrogenSpec, Z_new: float):
    """换到核电荷 Z_new 且 Z·R 不变的问题

    Returns:
        (HydrogenSpec, float): 新问题以及能量比例 (Z_new/Z)²，E_new = 比例·E_old
    """
    if not (math.isfinite(Z_new) and Z_new > 0):
        raise ValidationError(f"Z 必须为正: {Z_new}")
    rescaled = replace(spec, Z=float(Z_new), R=spec.Z * spec.R / Z_new)
    return rescaled, (Z_new / spec.Z) ** 2


def hydrogen_via_oscillator(spec: HydrogenSpec, tol: float = 1e-12, max_iterations: int = 100,
                            integrate_tol: float = shooting.DEFAULT_INTEGRATE_TOL,
                            newton_tol: float = shooting.DEFAULT_NEWTON_TOL) -> Eigenpair:
    """经二次换元 y = (k/2)x² 把 Z = 2 的受限氢原子化为 ν = 2ℓ+1 的受限谐振子

    k = (−E)^{−1/2} 是 g(k) = λ^Λ(L(k))/4 − k 的根，L(k) = √(2R′/k)。
    g(nh) ≥ 0；向右加倍找到 g < 0 的点后用 brentq 求根。

    Raises:
        ConvergenceError: 找不到变号区间（受限能量已非负）或 brentq 未收敛
    """
    rescaled, factor = rescale_hydrogen(spec, 2.0)
    oscillator = harmonic_potential(1.0, kind=RADIAL)
    mode = ModeSpec(spec.radial_index, spec.h, 2.0 * spec.ell + 1.0)

    def excess(k: float) -> float:
        length = math.sqrt(2.0 * rescaled.R / k)
        pair = confined_eigenvalue(oscillator, ConfinementDomain.box(length), mode, integrate_tol, newton_tol)
        return pair.value / 4.0 - k

    lower = spec.n * spec.h
    if excess(lower) <= 0.0:
        logger.warning("R = %r 时 k 的位移低于求解精度，返回无约束值", spec.R)
        k, iterations = lower, 0
    else:
        upper = 2.0 * lower
        for _ in range(MAX_BRACKET_DOUBLINGS):
            if excess(upper) < 0.0:
                break
            lower, upper = upper, 2.0 * upper
        else:
            raise ConvergenceError(f"R = {spec.R!r} 时找不到 k 的变号区间，受限能量可能已非负",
                                   MAX_BRACKET_DOUBLINGS)
        try:
            k, result = brentq(excess, lower, upper, xtol=tol * lower, rtol=max(tol, 4.0 * np.finfo(float).eps),
                               maxiter=max_iterations, full_output=True)
        except RuntimeError as e:
            raise ConvergenceError(f"k(R) 求根未收敛: {e}", max_iterations) from e
        iterations = result.iterations
    energy = factor * (-1.0 / (k * k))
    return Eigenpair(spec.radial_index, energy, SHOOTING,
                     {"route": "oscillator", "k": k, "iterations": iterations,
                      "L": math.sqrt(2.0 * rescaled.R / k)})
