"""
特殊函数：Lanczos Γ 函数与精确阶乘表
"""

import math
from itertools import accumulate
from typing import List

# g = 7, n = 9 的 Lanczos 系数
LANCZOS_G = 7.0
LANCZOS_COEFFICIENTS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)

# 0! .. 20!
FACTORIAL_TABLE: List[int] = [1] + list(accumulate(range(1, 21), lambda a, b: a * b))


def _lanczos_series(z: float) -> float:
    total = LANCZOS_COEFFICIENTS[0]
    for i, coefficient in enumerate(LANCZOS_COEFFICIENTS[1:], start=1):
        total += coefficient / (z + i)
    return total


def gamma(x: float) -> float:
    """Γ(x)，x 为非正整数时抛出 ValueError"""
    if x <= 0 and float(x).is_integer():
        raise ValueError(f"Γ 在非正整数处无定义: {x}")
    if x < 0.5:
        return math.pi / (math.sin(math.pi * x) * gamma(1.0 - x))
    z = x - 1.0
    t = z + LANCZOS_G + 0.5
    return math.sqrt(2.0 * math.pi) * t ** (z + 0.5) * math.exp(-t) * _lanczos_series(z)


def log_gamma(x: float) -> float:
    """log Γ(x)，x > 0"""
    if x <= 0:
        raise ValueError(f"log_gamma 只接受正数: {x}")
    if x < 0.5:
        return math.log(math.pi / math.sin(math.pi * x)) - log_gamma(1.0 - x)
    z = x - 1.0
    t = z + LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (z + 0.5) * math.log(t) - t + math.log(_lanczos_series(z))


def factorial(n: int) -> float:
    """n!，n ≤ 20 查表，更大时用 Γ(n+1)"""
    if n < 0:
        raise ValueError(f"阶乘参数必须非负: {n}")
    if n < len(FACTORIAL_TABLE):
        return float(FACTORIAL_TABLE[n])
    return math.exp(log_gamma(n + 1.0))


def log_factorial(n: int) -> float:
    if n < 0:
        raise ValueError(f"阶乘参数必须非负: {n}")
    if n < len(FACTORIAL_TABLE):
        return math.log(FACTORIAL_TABLE[n])
    return log_gamma(n + 1.0)


def gamma_half_integer(k: int) -> float:
    """Γ(k + 1/2) 的精确表达式 (2k)! √π / (4^k k!)，用于交叉校验"""
    if k < 0:
        raise ValueError("k 必须非负")
    return math.factorial(2 * k) / (4 ** k * math.factorial(k)) * math.sqrt(math.pi)
