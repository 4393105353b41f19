"""Expressions in one variable x for constraint functions and objectives.

Grammar (whitespace insignificant)::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := unary ('^' integer)?
    unary  := '-' unary | atom
    atom   := number | 'x' | '(' expr ')' | '(' expr cmp expr ')'
            | ident '(' expr (',' expr)* ')'

Comparisons evaluate to exactly 0.0 or 1.0; ``>=`` and ``<=`` are inclusive.
"""
from __future__ import annotations
import logging
import math
import re
from dataclasses import dataclass
from typing import Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import EvaluationFault, ExprSyntaxError


log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: int


@dataclass(frozen=True)
class Call:
    name: str
    args: Tuple["Expr", ...]


@dataclass(frozen=True)
class Compare:
    op: str
    left: "Expr"
    right: "Expr"


Expr = Union[Num, Var, Neg, BinOp, Pow, Call, Compare]

# name -> (min args, max args)
FUNCTIONS = {
    "abs": (1, 1),
    "exp": (1, 1),
    "log": (1, 1),
    "sqrt": (1, 1),
    "min": (1, None),
    "max": (1, None),
}
COMPARISONS = ("<=", ">=", "<", ">")

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op><=|>=|[-+*/^(),<>])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # num, int, ident, op, end
    text: str
    offset: int


def tokenize(text: str) -> List[Token]:
    tokens: List[Token] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        offset = len(text[:pos].encode("utf-8"))
        if not m:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", offset)
        kind = m.lastgroup or ""
        if kind == "num" and re.fullmatch(r"\d+", m.group()):
            kind = "int"
        if kind != "ws":
            tokens.append(Token(kind, m.group(), offset))
        pos = m.end()
    tokens.append(Token("end", "", len(text.encode("utf-8"))))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def take(self) -> Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if self.tok.text != text or self.tok.kind == "end":
            raise ExprSyntaxError(f"expected {text!r}, found {self.tok.text or 'end of input'!r}", self.tok.offset)
        return self.take()

    def parse(self) -> Expr:
        e = self.expr()
        if self.tok.kind != "end":
            raise ExprSyntaxError(f"unexpected {self.tok.text!r}", self.tok.offset)
        return e

    def expr(self) -> Expr:
        left = self.term()
        while self.tok.kind == "op" and self.tok.text in ("+", "-"):
            op = self.take().text
            left = BinOp(op, left, self.term())
        return left

    def term(self) -> Expr:
        left = self.factor()
        while self.tok.kind == "op" and self.tok.text in ("*", "/"):
            op = self.take().text
            left = BinOp(op, left, self.factor())
        return left

    def factor(self) -> Expr:
        base = self.unary()
        if self.tok.text == "^":
            self.take()
            sign = 1
            if self.tok.text == "-":
                self.take()
                sign = -1
            t = self.tok
            if t.kind != "int":
                raise ExprSyntaxError("non-integer exponent", t.offset)
            self.take()
            return Pow(base, sign * int(t.text))
        return base

    def unary(self) -> Expr:
        if self.tok.text == "-":
            self.take()
            return Neg(self.unary())
        return self.atom()

    def atom(self) -> Expr:
        t = self.tok
        if t.kind in ("num", "int"):
            self.take()
            return Num(float(t.text))
        if t.kind == "ident":
            self.take()
            if t.text == "x":
                return Var()
            if t.text not in FUNCTIONS:
                raise ExprSyntaxError(f"unknown identifier {t.text!r}", t.offset)
            self.expect("(")
            args = [self.expr()]
            while self.tok.text == ",":
                self.take()
                args.append(self.expr())
            self.expect(")")
            lo, hi = FUNCTIONS[t.text]
            if len(args) < lo or (hi is not None and len(args) > hi):
                raise ExprSyntaxError(f"{t.text}() takes {lo if lo == hi else f'at least {lo}'} argument(s)", t.offset)
            return Call(t.text, tuple(args))
        if t.text == "(":
            self.take()
            inner = self.expr()
            if self.tok.text in COMPARISONS:
                op = self.take().text
                inner = Compare(op, inner, self.expr())
            self.expect(")")
            return inner
        raise ExprSyntaxError(f"unexpected {t.text or 'end of input'!r}", t.offset)


def parse_expr(text: str) -> Expr:
    return _Parser(text).parse()


def format_expr(e: Expr) -> str:
    """Print an expression so that parse_expr reproduces the same tree."""
    if isinstance(e, Num):
        return repr(float(e.value))
    if isinstance(e, Var):
        return "x"
    if isinstance(e, Neg):
        inner = format_expr(e.operand)
        return f"-({inner})" if isinstance(e.operand, Pow) else f"-{inner}"
    if isinstance(e, BinOp):
        return f"({format_expr(e.left)} {e.op} {format_expr(e.right)})"
    if isinstance(e, Pow):
        base = format_expr(e.base)
        if isinstance(e.base, Pow):
            base = f"({base})"
        return f"{base}^{e.exponent}"
    if isinstance(e, Call):
        return f"{e.name}({', '.join(format_expr(a) for a in e.args)})"
    if isinstance(e, Compare):
        return f"({format_expr(e.left)} {e.op} {format_expr(e.right)})"
    raise TypeError(f"not an expression node: {e!r}")


def _compare(op: str, a: float, b: float) -> float:
    if op == "<":
        return 1.0 if a < b else 0.0
    if op == "<=":
        return 1.0 if a <= b else 0.0
    if op == ">":
        return 1.0 if a > b else 0.0
    return 1.0 if a >= b else 0.0


def _eval(e: Expr, x: float) -> float:
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        return x
    if isinstance(e, Neg):
        return -_eval(e.operand, x)
    if isinstance(e, BinOp):
        a = _eval(e.left, x)
        b = _eval(e.right, x)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if b == 0.0:
            raise EvaluationFault("division by zero", x)
        return a / b
    if isinstance(e, Pow):
        b = _eval(e.base, x)
        if b == 0.0 and e.exponent < 0:
            raise EvaluationFault("division by zero", x)
        try:
            return b ** e.exponent
        except OverflowError:
            raise EvaluationFault("overflow in power", x)
    if isinstance(e, Call):
        args = [_eval(a, x) for a in e.args]
        if e.name == "abs":
            return abs(args[0])
        if e.name == "exp":
            try:
                return math.exp(args[0])
            except OverflowError:
                raise EvaluationFault("overflow in exp", x)
        if e.name == "log":
            if args[0] <= 0.0:
                raise EvaluationFault(f"log of non-positive {args[0]!r}", x)
            return math.log(args[0])
        if e.name == "sqrt":
            if args[0] < 0.0:
                raise EvaluationFault(f"sqrt of negative {args[0]!r}", x)
            return math.sqrt(args[0])
        if e.name == "min":
            return min(args)
        return max(args)
    if isinstance(e, Compare):
        return _compare(e.op, _eval(e.left, x), _eval(e.right, x))
    raise TypeError(f"not an expression node: {e!r}")


def eval_expr(e: Expr, x: float) -> float:
    x = float(x)
    value = float(_eval(e, x))
    if not math.isfinite(value):
        raise EvaluationFault("non-finite result", x)
    return value


def eval_many(e: Expr, xs: Sequence[float]) -> np.ndarray:
    return np.array([eval_expr(e, x) for x in xs], dtype=float)


def walk(e: Expr) -> Iterator[Expr]:
    yield e
    if isinstance(e, Neg):
        yield from walk(e.operand)
    elif isinstance(e, (BinOp, Compare)):
        yield from walk(e.left)
        yield from walk(e.right)
    elif isinstance(e, Pow):
        yield from walk(e.base)
    elif isinstance(e, Call):
        for a in e.args:
            yield from walk(a)


def has_var(e: Expr) -> bool:
    return any(isinstance(node, Var) for node in walk(e))


def affine_form(e: Expr) -> Optional[Tuple[float, float]]:
    """(a, b) with e(x) == a*x + b, or None when e is not affine in x."""
    if not has_var(e):
        try:
            return 0.0, eval_expr(e, 0.0)
        except EvaluationFault:
            return None
    if isinstance(e, Var):
        return 1.0, 0.0
    if isinstance(e, Neg):
        inner = affine_form(e.operand)
        return None if inner is None else (-inner[0], -inner[1])
    if isinstance(e, Pow):
        if e.exponent == 1:
            return affine_form(e.base)
        if e.exponent == 0:
            return 0.0, 1.0
        return None
    if isinstance(e, BinOp):
        left, right = affine_form(e.left), affine_form(e.right)
        if left is None or right is None:
            return None
        if e.op == "+":
            return left[0] + right[0], left[1] + right[1]
        if e.op == "-":
            return left[0] - right[0], left[1] - right[1]
        if e.op == "*":
            if left[0] == 0.0:
                return left[1] * right[0], left[1] * right[1]
            if right[0] == 0.0:
                return right[1] * left[0], right[1] * left[1]
            return None
        if right[0] == 0.0 and right[1] != 0.0:
            return left[0] / right[1], left[1] / right[1]
        return None
    return None


@dataclass(frozen=True)
class BreakpointScan:
    points: Tuple[float, ...]
    # set when some comparison had a shape whose jump could not be located
    warning: bool = False


def collect_breakpoints(e: Expr) -> BreakpointScan:
    points: List[float] = []
    warning = False
    for node in walk(e):
        if not isinstance(node, Compare):
            continue
        left, right = affine_form(node.left), affine_form(node.right)
        if left is None or right is None:
            warning = True
            log.warning("no breakpoint extracted from non-affine comparison %s", format_expr(node))
            continue
        a = left[0] - right[0]
        b = left[1] - right[1]
        if a != 0.0:
            points.append(-b / a + 0.0)
    return BreakpointScan(tuple(sorted(set(points))), warning)
