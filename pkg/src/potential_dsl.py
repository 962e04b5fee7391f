"""
势函数表达式解析器
命令行用户可以直接写 V(x) / W(x) 的表达式，例如 "x^2 + 0.1*x^4"

语法（优先级从高到低）：
    ^        右结合
    一元 -
    * /      左结合
    + -      左结合
函数只支持 exp, log, sin, cos, sinh, cosh, sqrt, abs，变量只有 x
"""

import logging
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

import numpy as np

from .exceptions import (
    EvaluationError,
    NondifferentiableError,
    ParseError,
    UnknownIdentifierError,
)

logger = logging.getLogger(__name__)

MAX_SOURCE_BYTES = 4096

FUNCTIONS: Dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "exp": np.exp,
    "log": np.log,
    "sin": np.sin,
    "cos": np.cos,
    "sinh": np.sinh,
    "cosh": np.cosh,
    "sqrt": np.sqrt,
    "abs": np.abs,
}

# 二元运算符的 (左绑定力, 右绑定力)
BINARY_POWER: Dict[str, Tuple[int, int]] = {
    "+": (10, 11),
    "-": (10, 11),
    "*": (20, 21),
    "/": (20, 21),
    "^": (30, 30),
}
UNARY_MINUS_POWER = 25

NODE_KINDS = {"+": "add", "-": "subtract", "*": "multiply", "/": "divide", "^": "power"}

_PREFIX_EXPECTED = frozenset({"number", "x", "(", "-"} | set(FUNCTIONS))
_NUMBER_RE = re.compile(r"(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?")
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Const:
    value: float

    kind = "constant"


@dataclass(frozen=True)
class Var:
    kind = "variable-x"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "ExprAst"
    right: "ExprAst"

    def __post_init__(self):
        if self.op not in BINARY_POWER:
            raise ValueError(f"未知运算符: {self.op}")

    @property
    def kind(self) -> str:
        return NODE_KINDS[self.op]


@dataclass(frozen=True)
class Call:
    name: str
    arg: "ExprAst"

    kind = "call"

    def __post_init__(self):
        if self.name not in FUNCTIONS:
            raise ValueError(f"未知函数: {self.name}")


ExprAst = Union[Const, Var, BinOp, Call]

X = Var()
ZERO = Const(0.0)
ONE = Const(1.0)
MINUS_ONE = Const(-1.0)


# ---------------------------------------------------------------------------
# 构造函数（只对字面量做精确折叠）
# ---------------------------------------------------------------------------

def _exact_fold(op: str, a: float, b: float) -> Optional[float]:
    """两个字面量的运算结果可以精确表示时返回结果，否则返回 None"""
    fa, fb = Fraction(a), Fraction(b)
    try:
        if op == "+":
            result, exact = a + b, fa + fb
        elif op == "-":
            result, exact = a - b, fa - fb
        elif op == "*":
            result, exact = a * b, fa * fb
        elif op == "/":
            if b == 0.0:
                return None
            result, exact = a / b, fa / fb
        else:
            if not float(b).is_integer() or abs(b) > 64 or (a == 0.0 and b < 0):
                return None
            result, exact = a ** int(b), fa ** int(b)
    except (OverflowError, ZeroDivisionError):
        return None
    if not np.isfinite(result) or Fraction(result) != exact:
        return None
    return float(result)


def binary(op: str, left: ExprAst, right: ExprAst) -> ExprAst:
    """构造二元节点，两侧均为常数且结果精确时折叠"""
    if isinstance(left, Const) and isinstance(right, Const):
        folded = _exact_fold(op, left.value, right.value)
        if folded is not None:
            return Const(folded)
    return BinOp(op, left, right)


def negate(node: ExprAst) -> ExprAst:
    if isinstance(node, Const):
        return Const(-node.value)
    return BinOp("*", MINUS_ONE, node)


def is_negation(node: ExprAst) -> bool:
    return isinstance(node, BinOp) and node.op == "*" and node.left == MINUS_ONE


def _is_const(node: ExprAst, value: float) -> bool:
    return isinstance(node, Const) and node.value == value


def add(a: ExprAst, b: ExprAst) -> ExprAst:
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    return binary("+", a, b)


def sub(a: ExprAst, b: ExprAst) -> ExprAst:
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return negate(b)
    return binary("-", a, b)


def mul(a: ExprAst, b: ExprAst) -> ExprAst:
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return ZERO
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    if isinstance(b, Const) and not isinstance(a, Const):
        a, b = b, a
    if isinstance(a, Const) and isinstance(b, BinOp) and b.op == "*" and isinstance(b.left, Const):
        folded = _exact_fold("*", a.value, b.left.value)
        if folded is not None:
            return mul(Const(folded), b.right)
    return binary("*", a, b)


def div(a: ExprAst, b: ExprAst) -> ExprAst:
    if _is_const(a, 0.0):
        return ZERO
    if _is_const(b, 1.0):
        return a
    return binary("/", a, b)


def power(a: ExprAst, b: ExprAst) -> ExprAst:
    if _is_const(b, 1.0):
        return a
    if _is_const(b, 0.0):
        return ONE
    return binary("^", a, b)


def call(name: str, arg: ExprAst) -> ExprAst:
    return Call(name, arg)


# ---------------------------------------------------------------------------
# 词法分析
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Token:
    kind: str  # number / ident / op / eof
    text: str
    offset: int
    value: float = 0.0


def tokenize(source: str) -> List[Token]:
    """把源码切分为记号，偏移量按 UTF-8 字节计"""
    raw = source.encode("utf-8")
    if len(raw) > MAX_SOURCE_BYTES:
        raise ParseError(f"表达式超过 {MAX_SOURCE_BYTES} 字节", MAX_SOURCE_BYTES, source=source)
    tokens: List[Token] = []
    i = 0
    while i < len(source):
        c = source[i]
        offset = len(source[:i].encode("utf-8"))
        if c.isspace():
            i += 1
            continue
        if not c.isascii():
            raise ParseError(f"不支持的字符 {c!r}", offset, _PREFIX_EXPECTED, source=source)
        if c.isdigit() or (c == "." and i + 1 < len(source) and source[i + 1].isdigit()):
            match = _NUMBER_RE.match(source, i)
            text = match.group(0)
            value = float(text)
            if not np.isfinite(value):
                raise ParseError(f"数字超出范围: {text}", offset, source=source)
            tokens.append(Token("number", text, offset, value))
            i = match.end()
            continue
        if c.isalpha() or c == "_":
            match = _IDENT_RE.match(source, i)
            tokens.append(Token("ident", match.group(0), offset))
            i = match.end()
            continue
        if c in BINARY_POWER or c in "()":
            tokens.append(Token("op", c, offset))
            i += 1
            continue
        raise ParseError(f"无法识别的字符 {c!r}", offset, _PREFIX_EXPECTED, source=source)
    tokens.append(Token("eof", "", len(raw)))
    return tokens


# ---------------------------------------------------------------------------
# 语法分析（Pratt / 优先级爬升）
# ---------------------------------------------------------------------------

class _Parser:
    """递归下降 + 优先级爬升"""

    def __init__(self, source: str):
        self.source = source
        self.tokens = tokenize(source)
        self.pos = 0
        self.depth = 0

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        token = self.tokens[self.pos]
        self.pos += 1
        return token

    def error(self, message: str, token: Token, expected) -> ParseError:
        return ParseError(message, token.offset, frozenset(expected), source=self.source)

    def expect_close(self):
        token = self.peek()
        if token.kind == "op" and token.text == ")":
            self.advance()
            return
        raise self.error("缺少右括号", token, self._after_operand_expected())

    def _after_operand_expected(self):
        expected = set(BINARY_POWER)
        expected.add(")" if self.depth > 0 else "end of input")
        return expected

    def parse(self) -> ExprAst:
        if self.peek().kind == "eof":
            raise self.error("空表达式", self.peek(), _PREFIX_EXPECTED)
        node = self.expression(0)
        token = self.peek()
        if token.kind != "eof":
            raise self.error(f"多余的记号 {token.text!r}", token, self._after_operand_expected())
        return node

    def expression(self, min_power: int) -> ExprAst:
        left = self.prefix()
        while True:
            token = self.peek()
            if token.kind != "op" or token.text not in BINARY_POWER:
                if token.kind in ("number", "ident") or (token.kind == "op" and token.text == "("):
                    raise self.error(f"缺少运算符，遇到 {token.text!r}", token,
                                     self._after_operand_expected())
                break
            left_power, right_power = BINARY_POWER[token.text]
            if left_power < min_power:
                break
            self.advance()
            right = self.expression(right_power)
            left = binary(token.text, left, right)
        return left

    def prefix(self) -> ExprAst:
        token = self.advance()
        if token.kind == "number":
            return Const(token.value)
        if token.kind == "ident":
            if token.text == "x":
                return X
            if token.text in FUNCTIONS:
                opening = self.peek()
                if not (opening.kind == "op" and opening.text == "("):
                    raise self.error(f"函数 {token.text} 后需要左括号", opening, {"("})
                self.advance()
                self.depth += 1
                arg = self.expression(0)
                self.expect_close()
                self.depth -= 1
                return Call(token.text, arg)
            raise UnknownIdentifierError(f"未知标识符 {token.text!r}", token.offset,
                                         _PREFIX_EXPECTED, source=self.source)
        if token.kind == "op" and token.text == "(":
            self.depth += 1
            node = self.expression(0)
            self.expect_close()
            self.depth -= 1
            return node
        if token.kind == "op" and token.text == "-":
            return negate(self.expression(UNARY_MINUS_POWER))
        what = "输入结束" if token.kind == "eof" else repr(token.text)
        raise self.error(f"意外的 {what}", token, _PREFIX_EXPECTED)


def parse(text: str) -> ExprAst:
    """解析表达式

    Args:
        text: 表达式源码，非空且不超过 4096 字节

    Returns:
        ExprAst: 语法树

    Raises:
        ParseError: 语法错误，带字节偏移与期望记号集合
        UnknownIdentifierError: 出现 x 和内置函数以外的标识符
    """
    try:
        node = _Parser(text).parse()
    except RecursionError:
        raise ParseError("表达式嵌套过深", 0, source=text) from None
    sites = division_sites(node)
    if sites:
        logger.warning("表达式包含除法，求值时可能出现除以零: %s", ", ".join(sites))
    return node


# ---------------------------------------------------------------------------
# 遍历
# ---------------------------------------------------------------------------

def _children(node: ExprAst) -> Tuple[ExprAst, ...]:
    if isinstance(node, BinOp):
        return node.left, node.right
    if isinstance(node, Call):
        return (node.arg,)
    return ()


def _postorder(root: ExprAst, visit: Callable[[ExprAst, List[Any]], Any]) -> Any:
    """显式栈的后序遍历，visit(node, 子节点结果) 的返回值交给父节点

    4096 字节内的左结合长链深度可达两千层，不能依赖 Python 递归。
    同一个节点对象只访问一次（求导结果里子树是共享的）。
    """
    results: Dict[int, Any] = {}
    stack: List[Tuple[ExprAst, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if id(node) in results:
            continue
        kids = _children(node)
        if expanded or not kids:
            results[id(node)] = visit(node, [results[id(k)] for k in kids])
        else:
            stack.append((node, True))
            stack.extend((k, False) for k in reversed(kids))
    return results[id(root)]


# ---------------------------------------------------------------------------
# 输出
# ---------------------------------------------------------------------------

def _format_number(value: float) -> str:
    if value.is_integer() and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


def _precedence(node: ExprAst) -> int:
    if isinstance(node, Const):
        return 3 if np.signbit(node.value) and node.value != 0.0 else 5
    if isinstance(node, BinOp):
        if node.op in "+-":
            return 1
        if node.op in "*/":
            return 3 if is_negation(node) else 2
        return 4
    return 5


def _wrap(rendered: Tuple[str, int], required: int) -> str:
    text, precedence = rendered
    return f"({text})" if precedence < required else text


def _render_visit(node: ExprAst, kids: List[Tuple[str, int]]) -> Tuple[str, int]:
    if isinstance(node, Const):
        text = _format_number(node.value)
    elif isinstance(node, Var):
        text = "x"
    elif isinstance(node, Call):
        text = f"{node.name}({kids[0][0]})"
    elif is_negation(node):
        text = "-" + _wrap(kids[1], 3)
    elif node.op in "+-":
        text = f"{_wrap(kids[0], 1)} {node.op} {_wrap(kids[1], 2)}"
    elif node.op in "*/":
        text = f"{_wrap(kids[0], 2)} {node.op} {_wrap(kids[1], 3)}"
    else:
        text = f"{_wrap(kids[0], 5)}^{_wrap(kids[1], 3)}"
    return text, _precedence(node)


def pretty(node: ExprAst) -> str:
    """打印为可重新解析的最简括号形式"""
    return _postorder(node, _render_visit)[0]


def _sexpr_visit(node: ExprAst, kids: List[str]) -> str:
    if isinstance(node, Const):
        return _format_number(node.value)
    if isinstance(node, Var):
        return "x"
    if isinstance(node, Call):
        return f"({node.name} {kids[0]})"
    return f"({node.op} {kids[0]} {kids[1]})"


def sexpr(node: ExprAst) -> str:
    """前缀形式，调试和回归测试用"""
    return _postorder(node, _sexpr_visit)


def division_sites(node: ExprAst) -> List[str]:
    """列出所有除法子表达式"""
    found: List[str] = []
    stack = [node]
    while stack:
        current = stack.pop()
        if isinstance(current, BinOp):
            if current.op == "/":
                found.append(pretty(current))
            stack.extend((current.right, current.left))
        elif isinstance(current, Call):
            stack.append(current.arg)
    return found


def depends_on_x(node: ExprAst) -> bool:
    return _postorder(node, lambda current, kids: isinstance(current, Var) or any(kids))


# ---------------------------------------------------------------------------
# 求值
# ---------------------------------------------------------------------------

def _check_finite(value, node: ExprAst):
    if not np.all(np.isfinite(value)):
        raise EvaluationError("结果非有限", pretty(node))
    return value


def _is_abs_derivative(node: BinOp) -> bool:
    """u·u'/abs(u) 形式的除法（differentiate 对 abs 的输出）"""
    u = node.right.arg
    numerator = node.left
    return numerator is u or (isinstance(numerator, BinOp) and numerator.op == "*"
                              and (numerator.left is u or numerator.right is u))


def _evaluate_visit(node: ExprAst, kids: List[Any], x: np.ndarray):
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return x
    if isinstance(node, Call):
        arg = kids[0]
        if node.name == "log" and np.any(np.asarray(arg) <= 0):
            raise EvaluationError("log 的参数非正", pretty(node))
        if node.name == "sqrt" and np.any(np.asarray(arg) < 0):
            raise EvaluationError("sqrt 的参数为负", pretty(node))
        return _check_finite(FUNCTIONS[node.name](arg), node)
    left, right = kids
    if node.op == "+":
        return _check_finite(left + right, node)
    if node.op == "-":
        return _check_finite(left - right, node)
    if node.op == "*":
        return _check_finite(left * right, node)
    if node.op == "/":
        if np.any(np.asarray(right) == 0):
            if isinstance(node.right, Call) and node.right.name == "abs" and _is_abs_derivative(node):
                raise NondifferentiableError("abs 在 0 处不可导", pretty(node.right))
            raise EvaluationError("除以零", pretty(node))
        return _check_finite(left / right, node)
    base, exponent = np.asarray(left), np.asarray(right)
    if np.any((base < 0) & (exponent != np.round(exponent))):
        raise EvaluationError("负数的非整数次幂", pretty(node))
    if np.any((base == 0) & (exponent < 0)):
        raise EvaluationError("零的负数次幂", pretty(node))
    return _check_finite(np.power(left, right), node)


def _evaluate(node: ExprAst, x: np.ndarray):
    return _postorder(node, lambda current, kids: _evaluate_visit(current, kids, x))


def evaluate(node: ExprAst, x):
    """按 IEEE 双精度求值

    Args:
        node: 语法树
        x: 标量或 numpy 数组

    Returns:
        与 x 同形状的结果

    Raises:
        EvaluationError: 定义域错误或非有限结果，消息中带出错的子表达式
    """
    arr = np.asarray(x, dtype=float)
    with np.errstate(all="ignore"):
        value = _evaluate(node, arr)
    if arr.ndim == 0:
        return float(value)
    return np.broadcast_to(np.asarray(value, dtype=float), arr.shape).copy()


def compile_expression(node: ExprAst) -> Callable:
    """返回 x -> value 的可调用对象"""
    def function(x):
        return evaluate(node, x)
    function.__doc__ = pretty(node)
    return function


# ---------------------------------------------------------------------------
# 符号求导
# ---------------------------------------------------------------------------

def _derivative_visit(node: ExprAst, kids: List[ExprAst]) -> ExprAst:
    if isinstance(node, Const):
        return ZERO
    if isinstance(node, Var):
        return ONE
    if isinstance(node, Call):
        u, du = node.arg, kids[0]
        if node.name == "exp":
            outer = node
        elif node.name == "log":
            return div(du, u)
        elif node.name == "sin":
            outer = call("cos", u)
        elif node.name == "cos":
            outer = negate(call("sin", u))
        elif node.name == "sinh":
            outer = call("cosh", u)
        elif node.name == "cosh":
            outer = call("sinh", u)
        elif node.name == "sqrt":
            return div(du, mul(Const(2.0), node))
        else:
            return div(mul(u, du), node)
        return mul(outer, du)

    u, v = node.left, node.right
    du, dv = kids
    if node.op == "+":
        return add(du, dv)
    if node.op == "-":
        return sub(du, dv)
    if node.op == "*":
        return add(mul(du, v), mul(u, dv))
    if node.op == "/":
        return div(sub(mul(du, v), mul(u, dv)), power(v, Const(2.0)))
    if not depends_on_x(v):
        if isinstance(v, Const):
            reduced = Const(v.value - 1.0)
        else:
            reduced = sub(v, ONE)
        return mul(mul(v, power(u, reduced)), du)
    if not depends_on_x(u):
        return mul(mul(node, call("log", u)), dv)
    return mul(node, add(mul(dv, call("log", u)), div(mul(v, du), u)))


def differentiate(node: ExprAst) -> ExprAst:
    """对 x 求符号导数

    abs(u) 的导数写成 u*u'/abs(u)，在 u=0 处求值会抛出 NondifferentiableError
    """
    return _postorder(node, _derivative_visit)


def derivative_n(node: ExprAst, order: int) -> ExprAst:
    """order 阶导数"""
    for _ in range(order):
        node = differentiate(node)
    return node
