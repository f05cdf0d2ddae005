"""Small expression language for immersion components.

Grammar (EBNF)::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := base ('^' integer)?
    base   := number | ident | ident '(' expr ')' | '(' expr ')' | '-' base

Identifiers: variables x, y, z (aliases u1, u2, u3, plus u, v for the first
two) and the unary functions sin, cos, sinh, cosh, exp, log, sqrt, atan.  The grammar is total-order-4
differentiable by construction (no abs, no max), so jets of any expression
are well defined wherever evaluation succeeds.

ASTs are immutable dataclass trees.  `evaluate` works generically over
floats, jets and numpy arrays; `differentiate` produces the exact symbolic
partial derivative, which gives quadrature code a fast array path and the
test-suite an oracle independent of jet arithmetic.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .jets import Jet, jet_elementary

VARIABLE_ALIASES = {"x": 0, "y": 1, "z": 2, "u1": 0, "u2": 1, "u3": 2, "u": 0, "v": 1}
FUNCTION_NAMES = ("sin", "cos", "sinh", "cosh", "exp", "log", "sqrt", "atan")

_VAR_NAMES = ("x", "y", "z")  # canonical names used when printing


class ParseError(ValueError):
    """Syntax or name error; `offset` is the 1-based byte offset in the input."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class ExpressionDomainError(ValueError):
    """Evaluation hit a domain violation (log/sqrt/division)."""


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    index: int


@dataclass(frozen=True)
class Call:
    func: str  # element of FUNCTION_NAMES, or 'neg' for unary minus
    arg: "ExprNode"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: "ExprNode"
    right: "ExprNode"


@dataclass(frozen=True)
class Pow:
    base: "ExprNode"
    exponent: int


ExprNode = Union[Const, Var, Call, BinOp, Pow]


# -- parsing ------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            # skip leading whitespace manually to locate the bad byte
            stripped = pos
            while stripped < len(text) and text[stripped].isspace():
                stripped += 1
            if stripped >= len(text):
                break
            raise ParseError(f"unexpected character {text[stripped]!r}", stripped + 1)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind) + 1))
        pos = m.end()
    tokens.append(("eof", "", len(text) + 1))
    return tokens


class _Parser:
    def __init__(self, tokens: list[tuple[str, str, int]], dim: int):
        self.tokens = tokens
        self.pos = 0
        self.dim = dim

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op: str):
        kind, text, off = self.peek()
        if kind != "op" or text != op:
            raise ParseError(f"expected {op!r}", off)
        return self.advance()

    def parse(self) -> ExprNode:
        node = self.expr()
        kind, text, off = self.peek()
        if kind != "eof":
            raise ParseError(f"unexpected token {text!r}", off)
        return node

    def expr(self) -> ExprNode:
        node = self.term()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "+-":
                self.advance()
                node = BinOp(text, node, self.term())
            else:
                return node

    def term(self) -> ExprNode:
        node = self.factor()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "*/":
                self.advance()
                node = BinOp(text, node, self.factor())
            else:
                return node

    def factor(self) -> ExprNode:
        node = self.base()
        kind, text, _ = self.peek()
        if kind == "op" and text == "^":
            self.advance()
            sign = 1
            kind, text, off = self.peek()
            if kind == "op" and text == "-":
                self.advance()
                sign = -1
                kind, text, off = self.peek()
            if kind != "num":
                raise ParseError("expected an integer exponent after '^'", off)
            self.advance()
            value = float(text)
            if value != int(value):
                raise ParseError(f"exponent must be an integer, got {text}", off)
            node = Pow(node, sign * int(value))
        return node

    def base(self) -> ExprNode:
        kind, text, off = self.advance()
        if kind == "num":
            return Const(float(text))
        if kind == "op" and text == "-":
            return Call("neg", self.base())
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        if kind == "ident":
            if text in FUNCTION_NAMES:
                nkind, ntext, noff = self.peek()
                if nkind != "op" or ntext != "(":
                    raise ParseError(f"function {text!r} requires an argument list", noff)
                self.advance()
                arg = self.expr()
                self.expect_op(")")
                return Call(text, arg)
            if text in VARIABLE_ALIASES:
                index = VARIABLE_ALIASES[text]
                if index >= self.dim:
                    raise ParseError(
                        f"variable {text!r} out of range for dimension {self.dim}", off
                    )
                nkind, ntext, noff = self.peek()
                if nkind == "op" and ntext == "(":
                    raise ParseError(f"variable {text!r} is not callable", noff)
                return Var(index)
            raise ParseError(f"unknown identifier {text!r}", off)
        raise ParseError(f"unexpected token {text!r}" if text else "unexpected end of input", off)


def parse_expression(text: str, dim: int) -> ExprNode:
    """Parse `text` into an AST with variables restricted to indices < dim."""
    if not (1 <= dim <= 3):
        raise ValueError(f"dimension must be 1..3, got {dim}")
    return _Parser(_tokenize(text), dim).parse()


# -- printing -----------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "pow": 4, "atom": 5}


def _fmt(node: ExprNode) -> tuple[str, int]:
    if isinstance(node, Const):
        v = node.value
        if v < 0:
            return f"-{abs(v)!r}", _PREC["neg"]
        return repr(v), _PREC["atom"]
    if isinstance(node, Var):
        return _VAR_NAMES[node.index], _PREC["atom"]
    if isinstance(node, Call):
        if node.func == "neg":
            inner, prec = _fmt(node.arg)
            # '-' applies to a base, which binds tighter than '^': anything
            # non-atomic must be parenthesized or a following '^' captures it
            if prec < _PREC["atom"]:
                inner = f"({inner})"
            return f"-{inner}", _PREC["neg"]
        inner, _ = _fmt(node.arg)
        return f"{node.func}({inner})", _PREC["atom"]
    if isinstance(node, Pow):
        inner, prec = _fmt(node.base)
        if prec < _PREC["atom"]:
            inner = f"({inner})"
        return f"{inner}^{node.exponent}", _PREC["pow"]
    if isinstance(node, BinOp):
        lhs, lp = _fmt(node.left)
        rhs, rp = _fmt(node.right)
        prec = _PREC[node.op]
        if lp < prec:
            lhs = f"({lhs})"
        # - and / are left associative: parenthesize right operands of equal precedence
        if rp < prec or (rp == prec and node.op in "-/"):
            rhs = f"({rhs})"
        return f"{lhs} {node.op} {rhs}", prec
    raise TypeError(f"not an expression node: {node!r}")


def format_expression(node: ExprNode) -> str:
    """Render an AST as parseable text; parse(format(parse(s))) == parse(s)."""
    return _fmt(node)[0]


# -- evaluation ---------------------------------------------------------------

_MATH_FUNCS = {
    "sin": math.sin, "cos": math.cos, "sinh": math.sinh, "cosh": math.cosh,
    "exp": math.exp, "log": math.log, "sqrt": math.sqrt, "atan": math.atan,
}
_NUMPY_FUNCS = {
    "sin": np.sin, "cos": np.cos, "sinh": np.sinh, "cosh": np.cosh,
    "exp": np.exp, "log": np.log, "sqrt": np.sqrt, "atan": np.arctan,
}


def _apply_func(name: str, value):
    if isinstance(value, Jet):
        return jet_elementary(name, value)
    if isinstance(value, np.ndarray):
        return _NUMPY_FUNCS[name](value)
    try:
        return _MATH_FUNCS[name](value)
    except ValueError as exc:
        raise ExpressionDomainError(f"{name}({value}) is undefined") from exc


def evaluate_expression(node: ExprNode, values):
    """Evaluate over any scalar type with arithmetic: float, Jet, ndarray.

    `values` is the sequence of variable values, indexed by variable index.
    """
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return values[node.index]
    if isinstance(node, Call):
        arg = evaluate_expression(node.arg, values)
        if node.func == "neg":
            return -arg
        return _apply_func(node.func, arg)
    if isinstance(node, Pow):
        base = evaluate_expression(node.base, values)
        if isinstance(base, (int, float)) and node.exponent < 0 and base == 0:
            raise ExpressionDomainError("zero raised to a negative power")
        return base ** node.exponent
    if isinstance(node, BinOp):
        left = evaluate_expression(node.left, values)
        right = evaluate_expression(node.right, values)
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left * right
        if isinstance(right, (int, float)) and right == 0:
            raise ExpressionDomainError("division by zero")
        return left / right
    raise TypeError(f"not an expression node: {node!r}")


# -- symbolic differentiation ---------------------------------------------

def _is_zero(node: ExprNode) -> bool:
    return isinstance(node, Const) and node.value == 0


def _is_one(node: ExprNode) -> bool:
    return isinstance(node, Const) and node.value == 1


def _add(a: ExprNode, b: ExprNode) -> ExprNode:
    if _is_zero(a):
        return b
    if _is_zero(b):
        return a
    return BinOp("+", a, b)


def _sub(a: ExprNode, b: ExprNode) -> ExprNode:
    if _is_zero(b):
        return a
    if _is_zero(a):
        return Call("neg", b)
    return BinOp("-", a, b)


def _mul(a: ExprNode, b: ExprNode) -> ExprNode:
    if _is_zero(a) or _is_zero(b):
        return Const(0.0)
    if _is_one(a):
        return b
    if _is_one(b):
        return a
    return BinOp("*", a, b)


_CHAIN = {
    "sin": lambda u: Call("cos", u),
    "cos": lambda u: Call("neg", Call("sin", u)),
    "sinh": lambda u: Call("cosh", u),
    "cosh": lambda u: Call("sinh", u),
    "exp": lambda u: Call("exp", u),
    "log": lambda u: BinOp("/", Const(1.0), u),
    "sqrt": lambda u: BinOp("/", Const(0.5), Call("sqrt", u)),
    "atan": lambda u: BinOp("/", Const(1.0), _add(Const(1.0), Pow(u, 2))),
}


def differentiate(node: ExprNode, axis: int) -> ExprNode:
    """Exact symbolic partial derivative with light constant-folding."""
    if isinstance(node, Const):
        return Const(0.0)
    if isinstance(node, Var):
        return Const(1.0 if node.index == axis else 0.0)
    if isinstance(node, Call):
        d_arg = differentiate(node.arg, axis)
        if node.func == "neg":
            return Const(0.0) if _is_zero(d_arg) else Call("neg", d_arg)
        return _mul(_CHAIN[node.func](node.arg), d_arg)
    if isinstance(node, Pow):
        d_base = differentiate(node.base, axis)
        if node.exponent == 0 or _is_zero(d_base):
            return Const(0.0)
        scaled = _mul(Const(float(node.exponent)), Pow(node.base, node.exponent - 1))
        return _mul(scaled, d_base)
    if isinstance(node, BinOp):
        da = differentiate(node.left, axis)
        db = differentiate(node.right, axis)
        if node.op == "+":
            return _add(da, db)
        if node.op == "-":
            return _sub(da, db)
        if node.op == "*":
            return _add(_mul(da, node.right), _mul(node.left, db))
        # quotient rule
        num = _sub(_mul(da, node.right), _mul(node.left, db))
        return BinOp("/", num, Pow(node.right, 2))
    raise TypeError(f"not an expression node: {node!r}")


def substitute(node: ExprNode, mapping: dict[int, ExprNode]) -> ExprNode:
    """Replace variables by expressions (used for linear reparametrizations)."""
    if isinstance(node, Const):
        return node
    if isinstance(node, Var):
        return mapping.get(node.index, node)
    if isinstance(node, Call):
        return Call(node.func, substitute(node.arg, mapping))
    if isinstance(node, Pow):
        return Pow(substitute(node.base, mapping), node.exponent)
    if isinstance(node, BinOp):
        return BinOp(node.op, substitute(node.left, mapping), substitute(node.right, mapping))
    raise TypeError(f"not an expression node: {node!r}")


def expression_variables(node: ExprNode) -> set[int]:
    """Set of variable indices referenced by the expression."""
    if isinstance(node, Const):
        return set()
    if isinstance(node, Var):
        return {node.index}
    if isinstance(node, Call):
        return expression_variables(node.arg)
    if isinstance(node, Pow):
        return expression_variables(node.base)
    if isinstance(node, BinOp):
        return expression_variables(node.left) | expression_variables(node.right)
    raise TypeError(f"not an expression node: {node!r}")
