"""A small arithmetic expression language for defining scalar fields.

Grammar, loosest binding first::

    expr  := term (("+" | "-") term)*
    term  := unary (("*" | "/") unary)*
    unary := "-" unary | "+" unary | power
    power := atom ("^" unary)?          # right-associative
    atom  := NUMBER | VAR | FUNC "(" expr ("," expr)* ")" | "(" expr ")"

Variables are ``x1 .. xn``. Functions: exp, log, sqrt, abs (one argument),
min, max (two or more). Evaluation is vectorised with numpy over the
leading axes of the point array.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from qcert.errors import DimensionMismatch, DomainError, ExpressionOverflow, ParseError

UNARY_FUNCS = {"exp": np.exp, "log": np.log, "sqrt": np.sqrt, "abs": np.abs}
VARIADIC_FUNCS = {"min": np.minimum, "max": np.maximum}

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),])"
    r")"
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    offset: int


def _byte_offset(text, index):
    return len(text[:index].encode("utf-8"))


def tokenize(text):
    tokens = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.lastgroup is None:
            raise ParseError(_byte_offset(text, pos), f"unexpected character {text[pos]!r}")
        kind = m.lastgroup
        tokens.append(Token(kind, m.group(kind), _byte_offset(text, m.start(kind))))
        pos = m.end()
    tokens.append(Token("end", "", _byte_offset(text, len(text))))
    return tokens


class Node:
    def evaluate(self, x):
        raise NotImplementedError

    def max_var(self):
        return -1


@dataclass(frozen=True)
class Num(Node):
    value: float

    def evaluate(self, x):
        return np.full(x.shape[:-1], self.value)

    def __str__(self):
        text = repr(float(self.value))
        return f"({text})" if self.value < 0 else text


@dataclass(frozen=True)
class Var(Node):
    index: int

    def evaluate(self, x):
        return x[..., self.index]

    def max_var(self):
        return self.index

    def __str__(self):
        return f"x{self.index + 1}"


@dataclass(frozen=True)
class Neg(Node):
    operand: Node

    def evaluate(self, x):
        return -self.operand.evaluate(x)

    def max_var(self):
        return self.operand.max_var()

    def __str__(self):
        return f"(-{self.operand})"


def _power(a, b):
    if np.any((a < 0) & (b != np.round(b))):
        raise DomainError("negative base raised to a non-integer power")
    if np.any((a == 0) & (b < 0)):
        raise DomainError("zero raised to a negative power")
    return np.power(a, b)


def _divide(a, b):
    if np.any(b == 0):
        raise DomainError("division by zero")
    return a / b


_BINARY = {
    "+": np.add,
    "-": np.subtract,
    "*": np.multiply,
    "/": _divide,
    "^": _power,
}


@dataclass(frozen=True)
class BinOp(Node):
    op: str
    left: Node
    right: Node

    def evaluate(self, x):
        a = self.left.evaluate(x)
        b = self.right.evaluate(x)
        return _BINARY[self.op](a, b)

    def max_var(self):
        return max(self.left.max_var(), self.right.max_var())

    def __str__(self):
        return f"({self.left} {self.op} {self.right})"


@dataclass(frozen=True)
class Call(Node):
    name: str
    args: tuple

    def evaluate(self, x):
        vals = [a.evaluate(x) for a in self.args]
        if self.name in VARIADIC_FUNCS:
            out = vals[0]
            for v in vals[1:]:
                out = VARIADIC_FUNCS[self.name](out, v)
            return out
        (v,) = vals
        if self.name == "log" and np.any(v <= 0):
            raise DomainError("log of a non-positive number")
        if self.name == "sqrt" and np.any(v < 0):
            raise DomainError("sqrt of a negative number")
        return UNARY_FUNCS[self.name](v)

    def max_var(self):
        return max(a.max_var() for a in self.args)

    def __str__(self):
        return f"{self.name}({', '.join(str(a) for a in self.args)})"


class _Parser:
    def __init__(self, text, dim):
        self.text = text
        self.tokens = tokenize(text)
        self.pos = 0
        self.dim = dim

    @property
    def tok(self):
        return self.tokens[self.pos]

    def advance(self):
        t = self.tokens[self.pos]
        self.pos += 1
        return t

    def expect(self, text):
        if self.tok.text != text or self.tok.kind != "op":
            raise ParseError(self.tok.offset, f"expected {text!r}, found {self._describe()}")
        return self.advance()

    def _describe(self):
        return "end of input" if self.tok.kind == "end" else repr(self.tok.text)

    def parse(self):
        node = self.expr()
        if self.tok.kind != "end":
            raise ParseError(self.tok.offset, f"unexpected {self._describe()}")
        return node

    def expr(self):
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.advance().text
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.advance().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.tok.kind == "op" and self.tok.text == "-":
            self.advance()
            return Neg(self.unary())
        if self.tok.kind == "op" and self.tok.text == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        tok = self.tok
        if tok.kind == "num":
            self.advance()
            return Num(float(tok.text))
        if tok.kind == "name":
            self.advance()
            if tok.text in UNARY_FUNCS or tok.text in VARIADIC_FUNCS:
                return self.call(tok)
            m = re.fullmatch(r"x([1-9]\d*)", tok.text)
            if m is None:
                raise ParseError(tok.offset, f"unknown name {tok.text!r}")
            index = int(m.group(1)) - 1
            if self.dim is not None and index >= self.dim:
                raise ParseError(tok.offset, f"variable {tok.text} exceeds dimension {self.dim}")
            return Var(index)
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        raise ParseError(tok.offset, f"expected an operand, found {self._describe()}")

    def call(self, name_tok):
        self.expect("(")
        args = [self.expr()]
        while self.tok.kind == "op" and self.tok.text == ",":
            self.advance()
            args.append(self.expr())
        self.expect(")")
        name = name_tok.text
        if name in UNARY_FUNCS and len(args) != 1:
            raise ParseError(name_tok.offset, f"{name} takes one argument, got {len(args)}")
        if name in VARIADIC_FUNCS and len(args) < 2:
            raise ParseError(name_tok.offset, f"{name} takes at least two arguments")
        return Call(name, tuple(args))


class Expression:
    """A parsed expression; callable on points of shape ``(..., n)``."""

    def __init__(self, root: Node, text: str | None = None, dim: int | None = None):
        self.root = root
        self.text = text if text is not None else str(root)
        needed = root.max_var() + 1
        self.dim = max(needed, dim or 0, 1)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] < self.root.max_var() + 1:
            raise DimensionMismatch(f"expression uses x{self.root.max_var() + 1}, point has {x.shape[-1]} coordinates")
        with np.errstate(all="ignore"):
            out = np.asarray(self.root.evaluate(x), dtype=float)
        if not np.all(np.isfinite(out)):
            if np.all(np.isfinite(x)):
                raise ExpressionOverflow(f"non-finite value evaluating {self.text!r}")
        return out

    def __str__(self):
        return str(self.root)

    def __repr__(self):
        return f"Expression({self.text!r})"


def parse(text, dim=None):
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    return Expression(_Parser(text, dim).parse(), text, dim)


def eval_expression(e, x):
    return e(x)
