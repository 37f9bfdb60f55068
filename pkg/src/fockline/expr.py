"""Parameter expressions: literals, names, pi, + - * /, unary minus, cos/sin/sqrt/cis."""

from __future__ import annotations

import cmath
import math
import re
from collections.abc import Mapping
from dataclasses import dataclass
from typing import Union

from .errors import CircuitSyntaxError, DomainError, UnboundParam

FUNCTIONS = ("cis", "cos", "sin", "sqrt")
CONSTANTS = {"pi": math.pi}
RESERVED = frozenset(FUNCTIONS) | frozenset(CONSTANTS)
REAL_TOL = 1e-12
MAX_DEPTH = 64
MAX_NODES = 256

NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
NUMBER_RE = re.compile(r"(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?")


@dataclass(frozen=True)
class Num:
    value: float

    def __post_init__(self):
        if not (math.isfinite(self.value) and self.value >= 0):
            raise ValueError(f"literal must be finite and non-negative, got {self.value!r}")


@dataclass(frozen=True)
class Name:
    id: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = Union[Num, Name, Neg, BinOp, Call]


def free_names(e: Expr) -> set[str]:
    if isinstance(e, Name):
        return set() if e.id in CONSTANTS else {e.id}
    if isinstance(e, Num):
        return set()
    if isinstance(e, Neg):
        return free_names(e.operand)
    if isinstance(e, Call):
        return free_names(e.arg)
    return free_names(e.left) | free_names(e.right)


def eval_expr(e: Expr, env: Mapping[str, float]) -> complex:
    """Evaluate ``e`` in double precision; ``cis(x) = cos x + i sin x``."""
    try:
        value = _eval(e, env)
    except (OverflowError, ZeroDivisionError) as exc:
        raise DomainError(f"cannot evaluate {to_text(e)}: {exc}") from None
    if not (math.isfinite(value.real) and math.isfinite(value.imag)):
        raise DomainError(f"{to_text(e)} does not evaluate to a finite number")
    return value


def _eval(e: Expr, env: Mapping[str, float]) -> complex:
    if isinstance(e, Num):
        return complex(e.value)
    if isinstance(e, Name):
        if e.id in CONSTANTS:
            return complex(CONSTANTS[e.id])
        if e.id not in env:
            raise UnboundParam(f"parameter {e.id!r} is not bound")
        return complex(env[e.id])
    if isinstance(e, Neg):
        return -_eval(e.operand, env)
    if isinstance(e, Call):
        x = _eval(e.arg, env)
        if e.func == "sqrt":
            if abs(x.imag) <= REAL_TOL:
                if x.real < 0:
                    raise DomainError(f"sqrt of negative value {x.real!r}")
                return complex(math.sqrt(x.real))
            return cmath.sqrt(x)
        if e.func == "cis":
            return cmath.exp(1j * x)
        if abs(x.imag) <= REAL_TOL:
            f = math.cos if e.func == "cos" else math.sin
            return complex(f(x.real))
        return cmath.cos(x) if e.func == "cos" else cmath.sin(x)
    a, b = _eval(e.left, env), _eval(e.right, env)
    if e.op == "+":
        return a + b
    if e.op == "-":
        return a - b
    if e.op == "*":
        return a * b
    if b == 0:
        raise DomainError(f"division by zero in {to_text(e)}")
    return a / b


def eval_real(e: Expr, env: Mapping[str, float], what: str = "value") -> float:
    """Evaluate in a real-typed context (eta, angles)."""
    z = eval_expr(e, env)
    if abs(z.imag) > REAL_TOL:
        raise DomainError(f"{what} must be real, {to_text(e)} = {z!r}")
    return z.real


# printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}
_NEG_PREC = 3
_ATOM_PREC = 4


def _prec(e: Expr) -> int:
    if isinstance(e, BinOp):
        return _PREC[e.op]
    if isinstance(e, Neg):
        return _NEG_PREC
    return _ATOM_PREC


def _num_text(x: float) -> str:
    x = float(x)
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def to_text(e: Expr) -> str:
    """Canonical, space-free rendering; ``parse_expr(to_text(e)) == e``."""
    if isinstance(e, Num):
        return _num_text(e.value)
    if isinstance(e, Name):
        return e.id
    if isinstance(e, Call):
        return f"{e.func}({to_text(e.arg)})"
    if isinstance(e, Neg):
        inner = to_text(e.operand)
        return f"-({inner})" if _prec(e.operand) < _NEG_PREC else f"-{inner}"
    p = _PREC[e.op]
    left, right = to_text(e.left), to_text(e.right)
    if _prec(e.left) < p:
        left = f"({left})"
    if _prec(e.right) <= p:
        right = f"({right})"
    return f"{left}{e.op}{right}"


# parsing

_EXPR_START = frozenset({"<number>", "<name>", "(", "-"})
_AFTER_OPERAND = frozenset({"+", "-", "*", "/", ")", "<end>"})


class _ExprParser:
    """Recursive descent over one expression string.

    ``line`` and ``col0`` locate the first character for diagnostics.
    """

    def __init__(self, text: str, line: int = 1, col0: int = 1):
        self.text = text
        self.pos = 0
        self.line = line
        self.col0 = col0
        self.nodes = 0

    def count(self) -> None:
        # keeps evaluation and printing recursion shallow
        self.nodes += 1
        if self.nodes > MAX_NODES:
            raise self.error("expression too long")

    def error(self, message: str, expected=frozenset(), pos: int | None = None) -> CircuitSyntaxError:
        at = self.pos if pos is None else pos
        return CircuitSyntaxError(message, self.line, self.col0 + at, expected)

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos] in " \t":
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def parse(self) -> Expr:
        e = self.expr(0)
        if self.peek():
            raise self.error(f"unexpected {self.peek()!r} in expression", _AFTER_OPERAND)
        return e

    def expr(self, depth: int) -> Expr:
        if depth > MAX_DEPTH:
            raise self.error("expression nested too deeply")
        left = self.term(depth)
        while self.peek() in ("+", "-"):
            op = self.text[self.pos]
            self.pos += 1
            self.count()
            left = BinOp(op, left, self.term(depth))
        return left

    def term(self, depth: int) -> Expr:
        left = self.unary(depth)
        while self.peek() in ("*", "/"):
            op = self.text[self.pos]
            self.pos += 1
            self.count()
            left = BinOp(op, left, self.unary(depth))
        return left

    def unary(self, depth: int) -> Expr:
        if depth > MAX_DEPTH:
            raise self.error("expression nested too deeply")
        if self.peek() == "-":
            self.pos += 1
            self.count()
            return Neg(self.unary(depth + 1))
        return self.atom(depth)

    def atom(self, depth: int) -> Expr:
        c = self.peek()
        if not c:
            raise self.error("unexpected end of expression", _EXPR_START)
        if c == "(":
            self.pos += 1
            e = self.expr(depth + 1)
            if self.peek() != ")":
                raise self.error("missing ')'", {")"} | {"+", "-", "*", "/"})
            self.pos += 1
            return e
        m = NUMBER_RE.match(self.text, self.pos)
        if m:
            start = self.pos
            self.pos = m.end()
            value = float(m.group())
            if not math.isfinite(value):
                raise self.error("numeric literal out of range", pos=start)
            return Num(value)
        m = NAME_RE.match(self.text, self.pos)
        if m:
            start = self.pos
            self.pos = m.end()
            name = m.group()
            if name in FUNCTIONS:
                if self.peek() != "(":
                    raise self.error(f"function {name} needs an argument", {"("})
                self.pos += 1
                arg = self.expr(depth + 1)
                if self.peek() != ")":
                    raise self.error("missing ')'", {")"})
                self.pos += 1
                return Call(name, arg)
            if self.peek() == "(":
                raise self.error(f"unknown function {name!r}", set(FUNCTIONS), pos=start)
            return Name(name)
        raise self.error(f"unexpected {c!r} in expression", _EXPR_START)


def parse_expr(text: str, line: int = 1, col0: int = 1) -> Expr:
    """Parse one expression; errors carry the line/column of the offending character."""
    return _ExprParser(text, line, col0).parse()
