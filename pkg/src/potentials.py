"""
势函数模型
包括 PotentialSpec / ConfinementDomain、内置势函数、前提条件校验以及曲率归一化
"""

import logging
import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

import numpy as np

from . import potential_dsl
from .exceptions import DegenerateMinimumError, DomainError, DslError, ValidationError, solver_boundary

logger = logging.getLogger(__name__)

LINE = "line"
RADIAL = "radial"
KINDS = (LINE, RADIAL)

Function = Callable[[Any], Any]

# 校验常数
ZERO_TOLERANCE = 1e-10
EVENNESS_PAIRS = 16
EVENNESS_TOLERANCE = 1e-9
VALIDATION_MARGIN = 0.5
FD_CURVATURE_STEP = 1e-3


@dataclass(frozen=True)
class ConfinementDomain:
    """约束区间：直线情形 (r₋, r₊)，径向情形 (0, L)"""

    kind: str
    r_minus: float
    r_plus: float

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"未知的区间类型: {self.kind}")
        if not (math.isfinite(self.r_minus) and math.isfinite(self.r_plus)):
            raise DomainError(f"区间端点必须有限: ({self.r_minus}, {self.r_plus})")
        if self.kind == LINE and not (self.r_minus < 0.0 < self.r_plus):
            raise DomainError(f"直线区间需满足 r₋ < 0 < r₊，实际为 ({self.r_minus}, {self.r_plus})")
        if self.kind == RADIAL and not (self.r_minus == 0.0 and self.r_plus > 0.0):
            raise DomainError(f"径向区间需满足 L > 0，实际为 L = {self.r_plus}")

    @classmethod
    def interval(cls, r_minus: float, r_plus: float) -> "ConfinementDomain":
        return cls(LINE, float(r_minus), float(r_plus))

    @classmethod
    def box(cls, length: float) -> "ConfinementDomain":
        return cls(RADIAL, 0.0, float(length))

    @property
    def length(self) -> float:
        """径向盒子长度 L（直线情形为区间长度）"""
        return self.r_plus - self.r_minus

    def scaled(self, factor: float) -> "ConfinementDomain":
        return ConfinementDomain(self.kind, self.r_minus * factor, self.r_plus * factor)

    def enlarged(self, factor: float = 1.25) -> "ConfinementDomain":
        """以 0 为中心放大，用作工作区间 Ω′"""
        return self.scaled(factor)

    def contains(self, x: float) -> bool:
        if self.kind == RADIAL:
            return 0.0 < x <= self.r_plus
        return self.r_minus <= x <= self.r_plus

    def describe(self) -> str:
        if self.kind == RADIAL:
            return f"(0, {self.r_plus!r})"
        return f"({self.r_minus!r}, {self.r_plus!r})"


@dataclass(frozen=True)
class PotentialSpec:
    """光滑势函数及其导数

    taylor 保存 x^{2j} 的 Taylor 系数（径向 Frobenius 展开需要），
    harmonic_coefficient 非空表示势函数恰为 k·x²。
    """

    kind: str
    evaluate: Function
    derivative1: Optional[Function] = None
    derivative2: Optional[Function] = None
    name: str = ""
    taylor: Optional[Tuple[float, ...]] = None
    harmonic_coefficient: Optional[float] = None
    expression: Optional[potential_dsl.ExprAst] = None
    metadata: Dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"未知的势函数类型: {self.kind}")

    @cached_property
    def curvature_omega(self) -> float:
        return curvature_at_minimum(self)

    def first_derivative(self, x):
        if self.derivative1 is not None:
            return self.derivative1(x)
        step = 1e-5 * (1.0 + np.abs(x))
        return (self.evaluate(x + step) - self.evaluate(x - step)) / (2.0 * step)

    def second_derivative(self, x):
        if self.derivative2 is not None:
            return self.derivative2(x)
        step = 1e-4 * (1.0 + np.abs(x))
        return (self.evaluate(x + step) - 2.0 * self.evaluate(x) + self.evaluate(x - step)) / step ** 2

    def taylor_coefficients(self, count: int = 5) -> Tuple[float, ...]:
        """返回 W 在 0 处 x^0, x^2, ..., x^{2(count-1)} 的系数"""
        if self.taylor is not None:
            padded = tuple(self.taylor) + (0.0,) * count
            return padded[:count]
        if self.expression is None:
            raise ValidationError(f"势函数 {self.name or '<callable>'} 没有可用的 Taylor 系数")
        coefficients = []
        node = self.expression
        for j in range(count):
            try:
                value = potential_dsl.evaluate(node, 0.0)
            except DslError as e:
                raise ValidationError(f"无法在 0 处展开势函数 {self.name}: {e}") from e
            coefficients.append(value / math.factorial(2 * j))
            node = potential_dsl.derivative_n(node, 2)
        return tuple(coefficients)

    def with_argument_scale(self, c: float, name: Optional[str] = None) -> "PotentialSpec":
        """返回 x ↦ V(c·x)"""
        base = self

        def evaluate(x):
            return base.evaluate(c * x)

        def derivative1(x):
            return c * base.first_derivative(c * x)

        def derivative2(x):
            return c * c * base.second_derivative(c * x)

        taylor = self.taylor
        if taylor is None and self.expression is not None and self.kind == RADIAL:
            taylor = self.taylor_coefficients()
        if taylor is not None:
            taylor = tuple(a * c ** (2 * j) for j, a in enumerate(taylor))
        harmonic = None if self.harmonic_coefficient is None else self.harmonic_coefficient * c * c
        return PotentialSpec(
            kind=self.kind,
            evaluate=evaluate,
            derivative1=derivative1,
            derivative2=derivative2,
            name=name or f"{self.name}(×{c!r})",
            taylor=taylor,
            harmonic_coefficient=harmonic,
            metadata=dict(self.metadata),
        )

    def mirrored(self) -> "PotentialSpec":
        """x ↦ V(−x)，用于负半轴上的 Agmon 量"""
        return self.with_argument_scale(-1.0, name=f"{self.name}(−x)")

    def describe(self) -> str:
        return self.name or "<callable>"


@dataclass(frozen=True)
class Violation:
    assumption: str
    point: float
    observed: float


@dataclass(frozen=True)
class ValidationReport:
    violations: Tuple[Violation, ...] = ()

    @property
    def passed(self) -> bool:
        return not self.violations

    def summary(self) -> str:
        if self.passed:
            return "全部前提条件满足"
        lines = [f"发现 {len(self.violations)} 处违反前提条件:"]
        for v in self.violations:
            lines.append(f"  假设 ({v.assumption}) 在 x = {v.point!r} 处不满足，观测值 {v.observed!r}")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# 内置势函数
# ---------------------------------------------------------------------------

def harmonic_potential(k: float = 1.0, kind: str = LINE) -> PotentialSpec:
    """V(x) = k·x²"""
    if k <= 0:
        raise DegenerateMinimumError(f"harmonic 系数必须为正: {k}")
    name = "harmonic" if k == 1.0 else f"harmonic({k!r})"
    return PotentialSpec(
        kind=kind,
        evaluate=lambda x: k * x * x,
        derivative1=lambda x: 2.0 * k * x,
        derivative2=lambda x: 2.0 * k + 0.0 * x,
        name=name,
        taylor=(0.0, k),
        harmonic_coefficient=k,
    )


def quartic_potential(c: float, kind: str = LINE) -> PotentialSpec:
    """V(x) = x² + c·x⁴"""
    return PotentialSpec(
        kind=kind,
        evaluate=lambda x: x * x + c * x ** 4,
        derivative1=lambda x: 2.0 * x + 4.0 * c * x ** 3,
        derivative2=lambda x: 2.0 + 12.0 * c * x * x,
        name=f"quartic({c!r})",
        taylor=(0.0, 1.0, c),
    )


def cosh_potential(kind: str = LINE) -> PotentialSpec:
    """V(x) = cosh(x) − 1，ω = √(1/2)"""
    return PotentialSpec(
        kind=kind,
        evaluate=lambda x: np.cosh(x) - 1.0,
        derivative1=np.sinh,
        derivative2=np.cosh,
        name="cosh",
        taylor=tuple([0.0] + [1.0 / math.factorial(2 * j) for j in range(1, 8)]),
    )


def hydrogen_effective_potential(Z: float, ell: int) -> PotentialSpec:
    """氢原子经二次换元得到的 ν = 2ℓ+1 径向谐振子 W = x²"""
    if Z <= 0:
        raise ValidationError(f"Z 必须为正: {Z}")
    if ell < 0 or int(ell) != ell:
        raise ValidationError(f"ell 必须为非负整数: {ell}")
    spec = harmonic_potential(1.0, kind=RADIAL)
    return PotentialSpec(
        kind=RADIAL,
        evaluate=spec.evaluate,
        derivative1=spec.derivative1,
        derivative2=spec.derivative2,
        name=f"hydrogen-effective({Z!r}, {int(ell)})",
        taylor=spec.taylor,
        harmonic_coefficient=1.0,
        metadata={"Z": float(Z), "ell": int(ell), "nu": 2.0 * int(ell) + 1.0},
    )


def expression_potential(source: Union[str, potential_dsl.ExprAst], kind: str = LINE) -> PotentialSpec:
    """由表达式构造势函数，导数由符号求导得到"""
    ast = potential_dsl.parse(source) if isinstance(source, str) else source
    first = potential_dsl.differentiate(ast)
    second = potential_dsl.differentiate(first)
    return PotentialSpec(
        kind=kind,
        evaluate=potential_dsl.compile_expression(ast),
        derivative1=potential_dsl.compile_expression(first),
        derivative2=potential_dsl.compile_expression(second),
        name=potential_dsl.pretty(ast),
        expression=ast,
    )


_BUILTIN_RE = re.compile(r"^\s*(harmonic|quartic|cosh|hydrogen-effective)\s*(?:\((.*)\))?\s*$")


def _builtin(name: str, args: List[float], kind: str) -> PotentialSpec:
    if name == "harmonic" and len(args) <= 1:
        return harmonic_potential(args[0] if args else 1.0, kind)
    if name == "quartic" and len(args) <= 1:
        return quartic_potential(args[0] if args else 1.0, kind)
    if name == "cosh" and not args:
        return cosh_potential(kind)
    if name == "hydrogen-effective" and len(args) == 2 and float(args[1]).is_integer():
        return hydrogen_effective_potential(args[0], int(args[1]))
    raise ValidationError(f"内置势函数 {name} 的参数不正确: {args}")


@solver_boundary
def resolve_potential(text: str, kind: str = LINE) -> PotentialSpec:
    """解析内置名称（harmonic, harmonic(k), quartic(c), cosh, hydrogen-effective(Z, ell)）或表达式"""
    match = _BUILTIN_RE.match(text)
    if match:
        raw_args = match.group(2)
        try:
            args = [float(a) for a in raw_args.split(",")] if raw_args and raw_args.strip() else []
        except ValueError:
            args = None
        if args is not None:
            spec = _builtin(match.group(1), args, kind)
            if spec.kind != kind and match.group(1) == "hydrogen-effective":
                logger.warning("hydrogen-effective 只有径向形式，忽略 kind=%s", kind)
            return spec
    return expression_potential(text, kind)


# ---------------------------------------------------------------------------
# 校验与曲率
# ---------------------------------------------------------------------------

def _safe_value(f: Function, x: float) -> float:
    try:
        with np.errstate(all="ignore"):
            value = float(f(x))
    except (DslError, ArithmeticError, ValueError):
        return math.nan
    return value


def _assumption_ids(kind: str) -> Dict[str, str]:
    if kind == RADIAL:
        return {"smooth": "6", "minimum": "7", "tail": "8", "even": "9"}
    return {"smooth": "1", "minimum": "2", "tail": "3", "even": "9"}


@solver_boundary
def validate_potential(p: PotentialSpec, domain: ConfinementDomain, samples: int = 64) -> ValidationReport:
    """在区间加 50% 边界的网格上检查前提条件

    Args:
        p: 势函数
        domain: 约束区间
        samples: 采样点数，至少 16

    Returns:
        ValidationReport: 违反项列表，为空表示通过
    """
    if samples < 16:
        raise ValidationError(f"采样点数至少为 16，实际为 {samples}")
    ids = _assumption_ids(p.kind)
    violations: List[Violation] = []

    value0 = _safe_value(p.evaluate, 0.0)
    slope0 = _safe_value(p.first_derivative, 0.0)
    curvature0 = _safe_value(p.second_derivative, 0.0)
    scale = math.sqrt(curvature0 / 2.0) if math.isfinite(curvature0) and curvature0 > 0 else 1.0

    if not math.isfinite(value0) or abs(value0) > ZERO_TOLERANCE:
        violations.append(Violation(ids["minimum"], 0.0, value0))
    if not math.isfinite(slope0) or abs(slope0) / scale > ZERO_TOLERANCE:
        violations.append(Violation(ids["minimum"], 0.0, slope0))
    if not math.isfinite(curvature0) or curvature0 <= 0.0:
        violations.append(Violation("nondegenerate", 0.0, curvature0))

    if p.kind == RADIAL:
        grid = np.linspace(0.0, (1.0 + VALIDATION_MARGIN) * domain.r_plus, samples + 1)[1:]
        inner = domain.r_plus
    else:
        grid = np.concatenate([
            np.linspace((1.0 + VALIDATION_MARGIN) * domain.r_minus, 0.0, samples // 2 + 1)[:-1],
            np.linspace(0.0, (1.0 + VALIDATION_MARGIN) * domain.r_plus, samples - samples // 2 + 1)[1:],
        ])
        inner = None
    for x in grid:
        x = float(x)
        value = _safe_value(p.evaluate, x)
        if not math.isfinite(value):
            violations.append(Violation(ids["smooth"], x, value))
            continue
        if value <= 0.0:
            in_domain = domain.r_minus <= x <= domain.r_plus if inner is None else x <= inner
            violations.append(Violation(ids["minimum"] if in_domain else ids["tail"], x, value))

    if p.kind == RADIAL:
        for i in range(1, EVENNESS_PAIRS + 1):
            x = domain.r_plus * i / EVENNESS_PAIRS
            right = _safe_value(p.evaluate, x)
            left = _safe_value(p.evaluate, -x)
            gap = abs(right - left)
            if not math.isfinite(gap) or gap > EVENNESS_TOLERANCE * (1.0 + abs(right)):
                violations.append(Violation(ids["even"], x, left - right))

    report = ValidationReport(tuple(violations))
    if report.passed:
        logger.debug("势函数 %s 在 %s 上通过校验", p.describe(), domain.describe())
    else:
        logger.info("势函数 %s 校验失败: %d 项", p.describe(), len(violations))
    return report


def _second_difference(p: PotentialSpec, step: float) -> float:
    if p.kind == RADIAL:
        return 2.0 * (p.evaluate(step) - p.evaluate(0.0)) / step ** 2
    return (p.evaluate(step) - 2.0 * p.evaluate(0.0) + p.evaluate(-step)) / step ** 2


def curvature_at_minimum(p: PotentialSpec) -> float:
    """ω = √(V''(0)/2)

    有 derivative2 时直接求值，否则用步长 1e-3 的中心差分加两级 Richardson 外推

    Raises:
        DegenerateMinimumError: V''(0) <= 0
    """
    if p.derivative2 is not None:
        try:
            second = float(p.derivative2(0.0))
        except DslError as e:
            raise DegenerateMinimumError(f"degenerate minimum: 无法计算 V''(0) ({e})") from e
    else:
        d1 = _second_difference(p, FD_CURVATURE_STEP)
        d2 = _second_difference(p, FD_CURVATURE_STEP / 2)
        d4 = _second_difference(p, FD_CURVATURE_STEP / 4)
        r1 = (4.0 * d2 - d1) / 3.0
        r2 = (4.0 * d4 - d2) / 3.0
        second = (16.0 * r2 - r1) / 15.0
    if not math.isfinite(second) or second <= 0.0:
        raise DegenerateMinimumError(f"degenerate minimum: V''(0) = {second!r}")
    return math.sqrt(second / 2.0)


def normalize_to_unit_curvature(p: PotentialSpec, domain: ConfinementDomain,
                                h: float) -> Tuple[PotentialSpec, ConfinementDomain, float]:
    """把 V''(0) 归一化为 2

    Ṽ(x) = V(x/ω)，区间端点乘以 ω，h̃ = ω·h；两个问题的本征值相同。
    已经归一化的输入原样返回。
    """
    omega = p.curvature_omega
    if abs(omega - 1.0) <= 4.0 * np.finfo(float).eps:
        return p, domain, h
    normalized = p.with_argument_scale(1.0 / omega, name=f"{p.describe()} [ω→1]")
    if normalized.harmonic_coefficient is not None:
        normalized = PotentialSpec(
            kind=normalized.kind,
            evaluate=normalized.evaluate,
            derivative1=normalized.derivative1,
            derivative2=normalized.derivative2,
            name=normalized.name,
            taylor=(0.0, 1.0),
            harmonic_coefficient=1.0,
            metadata=normalized.metadata,
        )
    normalized.__dict__["curvature_omega"] = 1.0
    return normalized, domain.scaled(omega), omega * h
