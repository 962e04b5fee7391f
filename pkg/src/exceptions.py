"""
异常定义
校验类错误对应命令行退出码 2，数值求解类错误对应退出码 3
"""

import functools
from typing import Callable, FrozenSet, Optional, TypeVar

from numpy.linalg import LinAlgError

F = TypeVar("F", bound=Callable)


class ConfinedShiftError(Exception):
    """所有错误的基类"""


class ValidationError(ConfinedShiftError, ValueError):
    """输入或势函数不满足前提条件"""


class DegenerateMinimumError(ValidationError):
    """V''(0) <= 0，极小值退化"""


class NegativePotentialError(ValidationError):
    """积分路径上出现负的势能值"""

    def __init__(self, message: str, point: float):
        super().__init__(message)
        self.point = point


class DomainError(ValidationError):
    """约束区间不合法"""


class DslError(ValidationError):
    """势函数表达式相关错误"""


class ParseError(DslError):
    """语法错误，带字节偏移和期望的记号集合"""

    def __init__(self, message: str, offset: int, expected: FrozenSet[str] = frozenset(),
                 source: Optional[str] = None):
        super().__init__(message)
        self.message = message
        self.offset = offset
        self.expected = frozenset(expected)
        self.source = source

    def caret(self) -> str:
        """生成带 ^ 标注的源码片段"""
        if self.source is None:
            return self.message
        lines = [self.source, " " * self.offset + "^", self.message]
        if self.expected:
            lines.append("期望: " + ", ".join(sorted(self.expected)))
        return "\n".join(lines)


class UnknownIdentifierError(ParseError):
    """未知标识符"""


class EvaluationError(DslError):
    """求值时出现定义域错误或非有限结果"""

    def __init__(self, message: str, subexpression: str = ""):
        super().__init__(f"{message}: {subexpression}" if subexpression else message)
        self.subexpression = subexpression


class NondifferentiableError(EvaluationError):
    """在不可导点求导数值（abs 在 0 处）"""


class SolverError(ConfinedShiftError, RuntimeError):
    """数值求解失败"""


class IntegrationError(SolverError):
    """常微分方程积分失败"""

    def __init__(self, message: str, location: float):
        super().__init__(f"{message} (x = {location!r})")
        self.location = location


class SeriesConvergenceError(SolverError):
    """Frobenius 级数在项数上限内未收敛"""


class QuadratureError(SolverError):
    """自适应求积未收敛"""


class ConvergenceError(SolverError):
    """迭代次数超过上限"""

    def __init__(self, message: str, iterations: int):
        super().__init__(message)
        self.iterations = iterations


class SingularJacobianError(SolverError):
    """Jacobian 条件数过大"""

    def __init__(self, message: str, condition: float):
        super().__init__(message)
        self.condition = condition


class ModeMismatchError(SolverError):
    """收敛到的本征函数节点数与量子数不符"""

    def __init__(self, message: str, expected: int, observed: int):
        super().__init__(message)
        self.expected = expected
        self.observed = observed


class BoxExpansionError(SolverError):
    """计算无约束本征值时盒子扩张超过上限"""


class OracleError(SolverError):
    """有限差分校验网格过粗"""


class NumericalFailure(SolverError):
    """库内部漏出的算术、线性代数或递归深度错误"""


def solver_boundary(func: F) -> F:
    """把 ArithmeticError / LinAlgError / RecursionError 换成 NumericalFailure，其余异常原样抛出"""
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except ConfinedShiftError:
            raise
        except (ArithmeticError, LinAlgError, RecursionError) as e:
            raise NumericalFailure(f"{func.__name__}: {type(e).__name__}: {e}") from e
    return wrapper
