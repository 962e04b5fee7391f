"""
自适应 Gauss-Legendre 求积（15 点面板，区间二分）
"""

import logging
import math
from typing import Callable, Iterable, Optional

import numpy as np

from .exceptions import QuadratureError

logger = logging.getLogger(__name__)

PANEL_ORDER = 15
NODES, WEIGHTS = np.polynomial.legendre.leggauss(PANEL_ORDER)


def gauss_panel(f: Callable[[np.ndarray], np.ndarray], a: float, b: float) -> float:
    """单个面板上的 15 点 Gauss-Legendre 积分，f 需要支持数组输入"""
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    values = np.asarray(f(mid + half * NODES), dtype=float)
    if not np.all(np.isfinite(values)):
        raise QuadratureError(f"被积函数在 [{a!r}, {b!r}] 上出现非有限值")
    return float(half * np.dot(WEIGHTS, values))


def adaptive_gauss_legendre(f: Callable[[np.ndarray], np.ndarray],
                            a: float,
                            b: float,
                            tol: float = 1e-12,
                            breakpoints: Optional[Iterable[float]] = None,
                            max_depth: int = 48,
                            max_panels: int = 20000) -> float:
    """自适应积分 ∫_a^b f

    每个面板与其两半之和比较，差值超过按长度分配的误差预算时继续二分。

    Args:
        f: 向量化被积函数
        a, b: 积分上下限，b < a 时返回负值
        tol: 绝对误差目标 tol·(1+|积分|)
        breakpoints: 额外的强制分割点
        max_depth: 单个面板的最大二分深度
        max_panels: 面板总数上限

    Returns:
        float: 积分值

    Raises:
        QuadratureError: 超过深度或面板上限
    """
    if a == b:
        return 0.0
    if b < a:
        return -adaptive_gauss_legendre(f, b, a, tol, breakpoints, max_depth, max_panels)

    points = [a]
    for point in sorted(set(breakpoints or ())):
        if a < point < b:
            points.append(point)
    points.append(b)

    span = b - a
    wholes = [gauss_panel(f, lo, hi) for lo, hi in zip(points[:-1], points[1:])]
    budget = tol * (1.0 + abs(math.fsum(wholes)))

    accepted = []
    panels = 0
    stack = [(lo, hi, whole, 0) for lo, hi, whole in zip(points[:-1], points[1:], wholes)]
    while stack:
        lo, hi, whole, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        left = gauss_panel(f, lo, mid)
        right = gauss_panel(f, mid, hi)
        panels += 1
        refined = left + right
        local_budget = max(budget * (hi - lo) / span, 64.0 * np.finfo(float).eps * abs(refined),
                           1e-300)
        if abs(refined - whole) <= local_budget:
            accepted.append(refined)
            continue
        if depth >= max_depth or panels >= max_panels or mid in (lo, hi):
            raise QuadratureError(
                f"自适应求积未收敛: 区间 [{lo!r}, {hi!r}]，差值 {abs(refined - whole):.3e}，"
                f"深度 {depth}，面板数 {panels}"
            )
        stack.append((mid, hi, right, depth + 1))
        stack.append((lo, mid, left, depth + 1))

    result = math.fsum(accepted)
    logger.debug("求积完成: [%r, %r]，面板数 %d，结果 %r", a, b, panels, result)
    return result
