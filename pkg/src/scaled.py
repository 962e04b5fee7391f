"""
带对数尺度的数值表示
value = mantissa * exp(log_scale)，用于 e^{±φ/h} 量级的数不溢出也不下溢
"""

import math
from dataclasses import dataclass
from typing import Union

_LN2 = math.log(2.0)

Number = Union[int, float]


@dataclass(frozen=True)
class ScaledValue:
    """尾数 |mantissa| ∈ [1, 2) 或 0，log_scale 为自然对数单位"""

    mantissa: float
    log_scale: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.mantissa) and math.isfinite(self.log_scale)):
            raise ValueError(f"ScaledValue 分量必须有限: {self.mantissa!r}, {self.log_scale!r}")

    @classmethod
    def normalized(cls, mantissa: float, log_scale: float = 0.0) -> "ScaledValue":
        """把任意 (mantissa, log_scale) 规范化"""
        if mantissa == 0.0:
            return cls(0.0, 0.0)
        frac, exponent = math.frexp(mantissa)
        return cls(2.0 * frac, log_scale + (exponent - 1) * _LN2)

    @classmethod
    def from_float(cls, value: Number) -> "ScaledValue":
        return cls.normalized(float(value), 0.0)

    @classmethod
    def from_log(cls, log_abs: float, sign: float = 1.0) -> "ScaledValue":
        """由 log|v| 和符号构造"""
        return cls.normalized(math.copysign(1.0, sign), log_abs)

    @property
    def is_zero(self) -> bool:
        return self.mantissa == 0.0

    def log_abs(self) -> float:
        """log|v|，零值返回 -inf"""
        if self.is_zero:
            return -math.inf
        return math.log(abs(self.mantissa)) + self.log_scale

    def sign(self) -> float:
        if self.is_zero:
            return 0.0
        return math.copysign(1.0, self.mantissa)

    def to_float(self) -> float:
        """转换为普通浮点数（可能溢出为 inf 或下溢为 0）"""
        if self.is_zero:
            return 0.0
        if self.log_scale > 709.0:
            return math.copysign(math.inf, self.mantissa)
        return self.mantissa * math.exp(self.log_scale)

    def __float__(self) -> float:
        return self.to_float()

    def __neg__(self) -> "ScaledValue":
        return ScaledValue(-self.mantissa, self.log_scale)

    def __mul__(self, other: Union["ScaledValue", Number]) -> "ScaledValue":
        if not isinstance(other, ScaledValue):
            other = ScaledValue.from_float(other)
        if self.is_zero or other.is_zero:
            return ScaledValue(0.0, 0.0)
        return ScaledValue.normalized(self.mantissa * other.mantissa,
                                      self.log_scale + other.log_scale)

    __rmul__ = __mul__

    def __truediv__(self, other: Union["ScaledValue", Number]) -> "ScaledValue":
        if not isinstance(other, ScaledValue):
            other = ScaledValue.from_float(other)
        if other.is_zero:
            raise ZeroDivisionError("ScaledValue 除以零")
        if self.is_zero:
            return ScaledValue(0.0, 0.0)
        return ScaledValue.normalized(self.mantissa / other.mantissa,
                                      self.log_scale - other.log_scale)

    def __add__(self, other: Union["ScaledValue", Number]) -> "ScaledValue":
        if not isinstance(other, ScaledValue):
            other = ScaledValue.from_float(other)
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        big, small = (self, other) if self.log_scale >= other.log_scale else (other, self)
        gap = small.log_scale - big.log_scale
        # 相差超过 800 个 e 的项对双精度尾数没有贡献
        tail = small.mantissa * math.exp(gap) if gap > -800.0 else 0.0
        return ScaledValue.normalized(big.mantissa + tail, big.log_scale)

    __radd__ = __add__

    def __sub__(self, other: Union["ScaledValue", Number]) -> "ScaledValue":
        if not isinstance(other, ScaledValue):
            other = ScaledValue.from_float(other)
        return self + (-other)

    def compare_magnitude(self, other: "ScaledValue") -> int:
        """比较 |self| 与 |other|，返回 -1 / 0 / 1"""
        a, b = self.log_abs(), other.log_abs()
        return (a > b) - (a < b)

    def __repr__(self) -> str:
        return f"ScaledValue({self.mantissa!r}, {self.log_scale!r})"
