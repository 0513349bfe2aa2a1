"""A small arithmetic language for kernel and window expressions.

Grammar (``^`` binds tightest and associates to the right)::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := "-" unary | power
    power  := atom ("^" unary)?
    atom   := NUMBER | "s" | "t" | FUNC "(" args ")" | "(" expr ")"

Functions: ``min(a, b)``, ``max(a, b)``, ``exp(a)``, ``abs(a)``.
Evaluation is vectorized over numpy arrays of ``s`` and ``t``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ExprError

VARIABLES = ("s", "t")
FUNCTIONS = {"min": 2, "max": 2, "exp": 1, "abs": 1}

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^(),]))"
)


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


Node = Union[Const, Var, Neg, Binary, Call]


def tokenize(text: str) -> list:
    """``(kind, value, offset)`` triples, ending with an ``("end", "", len)`` marker."""
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None:
            bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ExprError(f"unexpected character {text[bad]!r}", bad)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text):
        self.tokens = tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, pos = self.tok
        if val != value or kind != "op":
            found = "end of input" if kind == "end" else repr(val)
            raise ExprError(f"expected {value!r}, found {found}", pos)
        return self.advance()

    def parse(self):
        node = self.expr()
        kind, val, pos = self.tok
        if kind != "end":
            raise ExprError(f"unexpected {val!r}", pos)
        return node

    def expr(self):
        node = self.term()
        while self.tok[0] == "op" and self.tok[1] in "+-":
            op = self.advance()[1]
            node = Binary(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.tok[0] == "op" and self.tok[1] in "*/":
            op = self.advance()[1]
            node = Binary(op, node, self.unary())
        return node

    def unary(self):
        if self.tok[0] == "op" and self.tok[1] == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.tok[0] == "op" and self.tok[1] == "^":
            self.advance()
            return Binary("^", base, self.unary())
        return base

    def atom(self):
        kind, val, pos = self.advance()
        if kind == "num":
            return Const(float(val))
        if kind == "name":
            if val in VARIABLES:
                return Var(val)
            if val in FUNCTIONS:
                self.expect("(")
                args = [self.expr()]
                while self.tok[0] == "op" and self.tok[1] == ",":
                    self.advance()
                    args.append(self.expr())
                self.expect(")")
                if len(args) != FUNCTIONS[val]:
                    raise ExprError(f"{val} takes {FUNCTIONS[val]} argument(s), got {len(args)}", pos)
                return Call(val, tuple(args))
            raise ExprError(f"unknown identifier {val!r}", pos)
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(val)
        raise ExprError(f"expected a number, variable, function or '(', found {found}", pos)


def parse_expr(text: str) -> Node:
    return _Parser(text).parse()


def evaluate(node: Node, s=0.0, t=0.0):
    """Evaluate at scalar or array ``s``, ``t`` (broadcast together)."""
    if isinstance(node, Const):
        return np.float64(node.value) + 0.0 * np.asarray(s, dtype=float) + 0.0 * np.asarray(t, dtype=float)
    if isinstance(node, Var):
        other = t if node.name == "s" else s
        return np.asarray(s if node.name == "s" else t, dtype=float) + 0.0 * np.asarray(other, dtype=float)
    if isinstance(node, Neg):
        return -evaluate(node.operand, s, t)
    if isinstance(node, Call):
        args = [evaluate(a, s, t) for a in node.args]
        if node.name == "min":
            return np.minimum(*args)
        if node.name == "max":
            return np.maximum(*args)
        if node.name == "exp":
            return np.exp(args[0])
        return np.abs(args[0])
    a = evaluate(node.left, s, t)
    b = evaluate(node.right, s, t)
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


def compile_expr(text: str):
    """Parse once; return ``f(s, t)`` that raises when any value is not finite."""
    tree = parse_expr(text)

    def f(s=0.0, t=0.0):
        out = evaluate(tree, s, t)
        if not np.all(np.isfinite(out)):
            raise ExprError(f"expression {text!r} is not finite on the requested points")
        return out

    return f
