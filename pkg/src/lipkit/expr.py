"""Expression language for user-defined scalar functions.

Grammar (all binary operators left-associative)::

    expr    := term (("+" | "-") term)*
    term    := power (("*" | "/") power)*
    power   := unary (("^" | "**") unary)*
    unary   := "-" unary | atom
    atom    := NUMBER | "pi" | VAR | CALL | "(" expr ")"
    VAR     := "x" DIGITS                      -- x0 .. x{dim-1}
    CALL    := NAME "(" expr ("," expr)* ")"
    NAME    := min | max | abs | pow | sin | cos | dist

Unary minus binds tighter than ``^``, so ``-x0^2`` is ``(-x0)^2``.
``dist(c0, ..., c{n-1})`` takes constant arguments and evaluates the owning
space's metric to that point. There is no implicit multiplication.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ExprError, GradientUnavailable


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    index: int


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    name: str  # min max abs sin cos
    args: tuple


@dataclass(frozen=True)
class DistTo:
    point: tuple


Node = Union[Const, Var, Neg, BinOp, Call, DistTo]

_ARITY = {"min": 2, "max": 2, "abs": 1, "sin": 1, "cos": 1, "pow": 2}

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>\*\*|[-+*/^(),])
    """,
    re.VERBOSE,
)


def _byte_offset(text: str, i: int) -> int:
    return len(text[:i].encode("utf-8"))


def _tokenize(text: str):
    tokens = []
    i = 0
    while i < len(text):
        m = _TOKEN.match(text, i)
        if m is None:
            raise ExprError(f"unexpected character {text[i]!r}", _byte_offset(text, i))
        kind = m.lastgroup
        if kind != "ws":
            value = m.group()
            if value == "**":
                value = "^"
            tokens.append((kind, value, _byte_offset(text, i)))
        i = m.end()
    tokens.append(("end", "", _byte_offset(text, len(text))))
    return tokens


class _Parser:
    def __init__(self, text: str, dim: int):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.dim = dim

    def peek(self):
        return self.tokens[self.pos]

    def take(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, value):
        kind, v, off = self.take()
        if v != value or kind not in ("op",):
            shown = v or "end of input"
            raise ExprError(f"expected {value!r}, found {shown!r}", off)

    def parse(self) -> Node:
        node = self.expr()
        kind, v, off = self.peek()
        if kind != "end":
            raise ExprError(f"unexpected token {v!r}", off)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.power()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.power())
        return node

    def power(self) -> Node:
        node = self.unary()
        while self.peek()[1] == "^":
            self.take()
            node = BinOp("^", node, self.unary())
        return node

    def unary(self) -> Node:
        if self.peek()[1] == "-" and self.peek()[0] == "op":
            self.take()
            return Neg(self.unary())
        return self.atom()

    def atom(self) -> Node:
        kind, v, off = self.take()
        if kind == "num":
            return Const(float(v))
        if kind == "op" and v == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "name":
            if v == "pi":
                return Const(math.pi)
            m = re.fullmatch(r"x(\d+)", v)
            if m:
                idx = int(m.group(1))
                if idx >= self.dim:
                    raise ExprError(
                        f"variable index out of range: {v} with dimension {self.dim}", off
                    )
                return Var(idx)
            if v in _ARITY or v == "dist":
                return self.call(v, off)
            raise ExprError(f"unknown identifier {v!r}", off)
        shown = v or "end of input"
        raise ExprError(f"unexpected token {shown!r}", off)

    def call(self, name: str, off: int) -> Node:
        self.expect("(")
        args = [self.expr()]
        while self.peek()[1] == ",":
            self.take()
            args.append(self.expr())
        self.expect(")")
        if name == "dist":
            if len(args) != self.dim:
                raise ExprError(f"dist expects {self.dim} coordinates, got {len(args)}", off)
            try:
                coords = tuple(float(_const_value(a)) for a in args)
            except ValueError:
                raise ExprError("dist arguments must be constants", off) from None
            return DistTo(coords)
        if len(args) != _ARITY[name]:
            raise ExprError(f"{name} expects {_ARITY[name]} argument(s), got {len(args)}", off)
        if name == "pow":
            return BinOp("^", args[0], args[1])
        return Call(name, tuple(args))


def _const_value(node: Node) -> float:
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Neg):
        return -_const_value(node.arg)
    if isinstance(node, BinOp):
        a, b = _const_value(node.left), _const_value(node.right)
        return {"+": a + b, "-": a - b, "*": a * b, "/": a / b if b else math.nan, "^": a**b}[
            node.op
        ]
    raise ValueError("not constant")


def parse_expr(text: str, dim: int) -> Node:
    """Parse ``text`` into an AST over variables ``x0 .. x{dim-1}``."""
    if not text or not text.strip():
        raise ExprError("empty expression", 0)
    return _Parser(text, dim).parse()


def to_text(node: Node) -> str:
    """Fully parenthesized source; parser output re-parses to an equal tree.

    Negative ``Const`` leaves (never produced by the parser) print as
    ``(-c)`` and come back as ``Neg(Const(c))``.
    """
    if isinstance(node, Const):
        return repr(node.value) if node.value >= 0 else f"(-{-node.value!r})"
    if isinstance(node, Var):
        return f"x{node.index}"
    if isinstance(node, Neg):
        return f"(-{to_text(node.arg)})"
    if isinstance(node, BinOp):
        return f"({to_text(node.left)} {node.op} {to_text(node.right)})"
    if isinstance(node, Call):
        return f"{node.name}({', '.join(to_text(a) for a in node.args)})"
    return "dist(" + ", ".join(repr(c) for c in node.point) + ")"


def variables(node: Node) -> set[int]:
    if isinstance(node, Var):
        return {node.index}
    if isinstance(node, Neg):
        return variables(node.arg)
    if isinstance(node, BinOp):
        return variables(node.left) | variables(node.right)
    if isinstance(node, Call):
        out = set()
        for a in node.args:
            out |= variables(a)
        return out
    return set()


def is_differentiable(node: Node) -> bool:
    """False when the tree contains min, max or dist (no subgradients)."""
    if isinstance(node, (Const, Var)):
        return True
    if isinstance(node, DistTo):
        return False
    if isinstance(node, Neg):
        return is_differentiable(node.arg)
    if isinstance(node, BinOp):
        return is_differentiable(node.left) and is_differentiable(node.right)
    return node.name not in ("min", "max") and all(is_differentiable(a) for a in node.args)


def evaluate(node: Node, X: np.ndarray, metric=None) -> np.ndarray:
    """Evaluate on a batch ``X`` of shape ``(m, dim)``.

    ``metric(P, Q)`` computes row distances and is needed only for ``dist``.
    """
    m = X.shape[0]
    if isinstance(node, Const):
        return np.full(m, node.value, dtype=X.dtype)
    if isinstance(node, Var):
        return X[:, node.index].copy()
    if isinstance(node, Neg):
        return -evaluate(node.arg, X, metric)
    if isinstance(node, BinOp):
        a = evaluate(node.left, X, metric)
        b = evaluate(node.right, X, metric)
        with np.errstate(all="ignore"):
            if node.op == "+":
                return a + b
            if node.op == "-":
                return a - b
            if node.op == "*":
                return a * b
            if node.op == "/":
                return a / b
            return np.power(a, b)
    if isinstance(node, Call):
        vals = [evaluate(a, X, metric) for a in node.args]
        if node.name == "min":
            return np.minimum(*vals)
        if node.name == "max":
            return np.maximum(*vals)
        return {"abs": np.abs, "sin": np.sin, "cos": np.cos}[node.name](vals[0])
    if metric is None:
        raise ExprError("dist() needs a metric space to evaluate")
    return metric(X, np.broadcast_to(np.array(node.point), X.shape))


def evaluate_with_grad(node: Node, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Forward-mode value and gradient, shapes ``(m,)`` and ``(m, dim)``."""
    m, n = X.shape
    if isinstance(node, Const):
        return np.full(m, node.value), np.zeros((m, n))
    if isinstance(node, Var):
        g = np.zeros((m, n))
        g[:, node.index] = 1.0
        return X[:, node.index].copy(), g
    if isinstance(node, Neg):
        v, g = evaluate_with_grad(node.arg, X)
        return -v, -g
    if isinstance(node, BinOp):
        a, ga = evaluate_with_grad(node.left, X)
        b, gb = evaluate_with_grad(node.right, X)
        with np.errstate(all="ignore"):
            if node.op == "+":
                return a + b, ga + gb
            if node.op == "-":
                return a - b, ga - gb
            if node.op == "*":
                return a * b, ga * b[:, None] + gb * a[:, None]
            if node.op == "/":
                return a / b, (ga * b[:, None] - gb * a[:, None]) / (b * b)[:, None]
            v = np.power(a, b)
            g = ga * (b * np.power(a, b - 1.0))[:, None]
            if variables(node.right):
                g = g + gb * (v * np.log(a))[:, None]
            return v, g
    if isinstance(node, Call) and node.name in ("abs", "sin", "cos"):
        a, ga = evaluate_with_grad(node.args[0], X)
        if node.name == "abs":
            return np.abs(a), ga * np.sign(a)[:, None]
        if node.name == "sin":
            return np.sin(a), ga * np.cos(a)[:, None]
        return np.cos(a), -ga * np.sin(a)[:, None]
    raise GradientUnavailable(f"no exact gradient through {type(node).__name__} node")
