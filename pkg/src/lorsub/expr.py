"""Coordinate-function expressions with exact first and second derivatives.

Grammar (standard precedence, left associative except unary minus)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('-' | '+') unary | power
    power  := atom ('^' ['-' | '+'] INTEGER)?
    atom   := NUMBER | NAME | FUNC '(' expr ')' | '(' expr ')'

``FUNC`` is one of ``sin``, ``cos``, ``exp``.  Every ``NAME`` must be one of
the coordinate names supplied to :func:`parse_expr`.  ``^`` only takes an
integer literal exponent, so every expression is a finite composition of
smooth primitives and second-order forward AD is exact.

Note that ``-x^2`` parses as ``-(x^2)``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .jet import Jet

__all__ = [
    "ExprError",
    "ExprSyntaxError",
    "UnknownIdentifierError",
    "EvalError",
    "Num",
    "Var",
    "BinOp",
    "Neg",
    "Pow",
    "Call",
    "ScalarExpr",
    "Jet2",
    "parse_expr",
    "eval_jet2",
    "FUNCTIONS",
]


class ExprError(ValueError):
    pass


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, source: str, pos: int):
        self.source = source
        self.pos = pos
        super().__init__(f"{message} at position {pos}: {source!r}")


class UnknownIdentifierError(ExprError):
    def __init__(self, name: str, source: str, pos: int, known: Sequence[str]):
        self.name = name
        self.source = source
        self.pos = pos
        super().__init__(
            f"unknown identifier {name!r} at position {pos} in {source!r}; "
            f"coordinates are {list(known)}"
        )


class EvalError(ArithmeticError):
    """Division by zero or a function evaluated outside its domain."""


# -- AST -------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str
    index: int


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: int


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Num, Var, BinOp, Neg, Pow, Call]

FUNCTIONS = ("sin", "cos", "exp")

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}
_NEG_PREC = 3
_POW_PREC = 4

_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()])"
    r")"
)


def _tokenize(source: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    n = len(source)
    while pos < n:
        m = _TOKEN_RE.match(source, pos)
        if m is None or m.end() == pos:
            if source[pos:].strip() == "":
                break
            bad = pos + (len(source[pos:]) - len(source[pos:].lstrip()))
            raise ExprSyntaxError(f"unexpected character {source[bad]!r}", source, bad)
        kind = m.lastgroup
        if kind is None:
            break
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, source: str, coords: Sequence[str]):
        self.source = source
        self.coords = list(coords)
        self.index = {c: i for i, c in enumerate(self.coords)}
        self.tokens = _tokenize(source)
        self.k = 0

    def peek(self):
        return self.tokens[self.k]

    def take(self):
        tok = self.tokens[self.k]
        self.k += 1
        return tok

    def expect(self, value: str):
        kind, text, pos = self.take()
        if text != value or kind != "op":
            what = "end of input" if kind == "end" else repr(text)
            raise ExprSyntaxError(f"expected {value!r}, found {what}", self.source, pos)

    def parse(self) -> Node:
        node = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {text!r}", self.source, pos)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        kind, text, _ = self.peek()
        if kind == "op" and text in ("-", "+"):
            self.take()
            inner = self.unary()
            return Neg(inner) if text == "-" else inner
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        kind, text, _ = self.peek()
        if kind == "op" and text == "^":
            self.take()
            sign = 1
            kind, text, pos = self.peek()
            if kind == "op" and text in ("-", "+"):
                self.take()
                sign = -1 if text == "-" else 1
            kind, text, pos = self.take()
            if kind != "num" or not text.isdigit():
                raise ExprSyntaxError("'^' needs an integer literal exponent", self.source, pos)
            return Pow(base, sign * int(text))
        return base

    def atom(self) -> Node:
        kind, text, pos = self.take()
        if kind == "num":
            return Num(float(text))
        if kind == "name":
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(text, arg)
            if text not in self.index:
                raise UnknownIdentifierError(text, self.source, pos, self.coords)
            return Var(text, self.index[text])
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect(")")
            return node
        what = "end of input" if kind == "end" else repr(text)
        raise ExprSyntaxError(f"unexpected {what}", self.source, pos)


# -- printing --------------------------------------------------------------

def _fmt_num(v: float) -> str:
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _to_source(node: Node, parent_prec: int = 0, right_side: bool = False) -> str:
    if isinstance(node, Num):
        return _fmt_num(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({_to_source(node.arg)})"
    if isinstance(node, Pow):
        s = f"{_to_source(node.base, _POW_PREC + 1)}^{node.exponent}"
        # the grammar takes a single exponent, so a^b^c must be written (a^b)^c
        return f"({s})" if parent_prec > _POW_PREC else s
    if isinstance(node, Neg):
        s = "-" + _to_source(node.operand, _NEG_PREC)
        return f"({s})" if parent_prec > _NEG_PREC else s
    prec = _PREC[node.op]
    s = f"{_to_source(node.left, prec)} {node.op} {_to_source(node.right, prec, True)}"
    if parent_prec > prec or (right_side and parent_prec == prec):
        return f"({s})"
    return s


# -- evaluation ------------------------------------------------------------

def _eval_float(node: Node, p) -> float:
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return float(p[node.index])
    if isinstance(node, Neg):
        return -_eval_float(node.operand, p)
    if isinstance(node, BinOp):
        a = _eval_float(node.left, p)
        b = _eval_float(node.right, p)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if b == 0.0:
            raise EvalError("division by zero")
        return a / b
    if isinstance(node, Pow):
        b = _eval_float(node.base, p)
        if node.exponent < 0 and b == 0.0:
            raise EvalError("zero raised to a negative power")
        return b ** node.exponent
    x = _eval_float(node.arg, p)
    return _apply_func(node.func, x)[0]


def _apply_func(name: str, x: float) -> tuple[float, float, float]:
    """Value, first and second derivative of a primitive at ``x``."""
    if name == "sin":
        s, c = math.sin(x), math.cos(x)
        return s, c, -s
    if name == "cos":
        s, c = math.sin(x), math.cos(x)
        return c, -s, -c
    try:
        e = math.exp(x)
    except OverflowError as exc:
        raise EvalError(f"exp overflow at {x!r}") from exc
    return e, e, e


class _S:
    """Scalar second-order jet used while walking the AST."""

    __slots__ = ("v", "g", "h")

    def __init__(self, v, g, h):
        self.v = v
        self.g = g
        self.h = h


def _chain(u: _S, f0: float, f1: float, f2: float) -> _S:
    return _S(f0, f1 * u.g, f1 * u.h + f2 * np.outer(u.g, u.g))


def _eval_jet(node: Node, p: np.ndarray, n: int) -> _S:
    if isinstance(node, Num):
        return _S(node.value, np.zeros(n), np.zeros((n, n)))
    if isinstance(node, Var):
        g = np.zeros(n)
        g[node.index] = 1.0
        return _S(float(p[node.index]), g, np.zeros((n, n)))
    if isinstance(node, Neg):
        u = _eval_jet(node.operand, p, n)
        return _S(-u.v, -u.g, -u.h)
    if isinstance(node, BinOp):
        a = _eval_jet(node.left, p, n)
        b = _eval_jet(node.right, p, n)
        if node.op == "+":
            return _S(a.v + b.v, a.g + b.g, a.h + b.h)
        if node.op == "-":
            return _S(a.v - b.v, a.g - b.g, a.h - b.h)
        if node.op == "/":
            if b.v == 0.0:
                raise EvalError("division by zero")
            r = 1.0 / b.v
            b = _chain(b, r, -r * r, 2.0 * r * r * r)
        ab = np.outer(a.g, b.g)
        return _S(a.v * b.v, a.g * b.v + a.v * b.g, a.h * b.v + a.v * b.h + ab + ab.T)
    if isinstance(node, Pow):
        u = _eval_jet(node.base, p, n)
        k = node.exponent
        if k == 0:
            return _S(1.0, np.zeros(n), np.zeros((n, n)))
        if k < 0 and u.v == 0.0:
            raise EvalError("zero raised to a negative power")
        f0 = u.v ** k
        f1 = k * u.v ** (k - 1) if k != 1 else 1.0
        f2 = k * (k - 1) * u.v ** (k - 2) if k not in (1, 2) else (2.0 if k == 2 else 0.0)
        return _chain(u, f0, f1, f2)
    u = _eval_jet(node.arg, p, n)
    return _chain(u, *_apply_func(node.func, u.v))


@dataclass(frozen=True)
class Jet2:
    """Value, gradient and Hessian of a scalar expression at a point."""

    value: float
    gradient: np.ndarray
    hessian: np.ndarray


@dataclass(frozen=True)
class ScalarExpr:
    """A parsed expression bound to an ordered list of coordinate names."""

    node: Node
    coords: tuple[str, ...]

    @property
    def dim(self) -> int:
        return len(self.coords)

    def to_source(self) -> str:
        return _to_source(self.node)

    def __str__(self) -> str:
        return self.to_source()

    def is_constant(self) -> bool:
        return not _has_var(self.node)

    def __call__(self, p) -> float:
        return _eval_float(self.node, _check_point(p, self.dim))

    def jet(self, p) -> Jet:
        """The expression at ``p`` as a scalar :class:`~lorsub.jet.Jet` of order 2."""
        s = _eval_jet(self.node, _check_point(p, self.dim), self.dim)
        return Jet(np.float64(s.v), s.g, s.h)


def _has_var(node: Node) -> bool:
    if isinstance(node, Var):
        return True
    if isinstance(node, Num):
        return False
    if isinstance(node, BinOp):
        return _has_var(node.left) or _has_var(node.right)
    if isinstance(node, Neg):
        return _has_var(node.operand)
    if isinstance(node, Pow):
        return _has_var(node.base)
    return _has_var(node.arg)


def _check_point(p, dim: int) -> np.ndarray:
    arr = np.asarray(p, dtype=float)
    if arr.shape != (dim,):
        raise ValueError(f"point has shape {arr.shape}, expected ({dim},)")
    if not np.all(np.isfinite(arr)):
        raise ValueError("point has non-finite coordinates")
    return arr


def parse_expr(source: str, coords: Sequence[str]) -> ScalarExpr:
    """Parse ``source`` into an expression over the coordinates ``coords``."""
    if not isinstance(source, str) or not source.strip():
        raise ExprSyntaxError("empty expression", str(source), 0)
    coords = tuple(coords)
    if len(set(coords)) != len(coords):
        raise ValueError(f"coordinate names are not distinct: {coords}")
    for c in coords:
        if c in FUNCTIONS:
            raise ValueError(f"coordinate name {c!r} shadows a function")
    return ScalarExpr(_Parser(source, coords).parse(), coords)


def eval_jet2(e: ScalarExpr, p) -> Jet2:
    s = _eval_jet(e.node, _check_point(p, e.dim), e.dim)
    h = 0.5 * (s.h + s.h.T)
    return Jet2(float(s.v), s.g, h)


def constant(value: float, coords: Sequence[str]) -> ScalarExpr:
    return ScalarExpr(Num(float(value)), tuple(coords))
