"""Recursive-descent parser for polynomial expressions.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := factor ('*' factor)*
    factor := number | var ('^' uint)? | '(' expr ')' ('^' uint)? | '-' factor
    var    := ('x' | 'u' | 'w') uint          (1-based index)

Implicit multiplication such as ``2x1`` is rejected.
"""
from __future__ import annotations

import re
from typing import Mapping, NamedTuple

from .poly import Polynomial, VarBlock, merge_blocks

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<var>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*^()])
""", re.VERBOSE)

_VAR = re.compile(r"([xuw])([1-9]\d*)$")


class ParseError(ValueError):
    def __init__(self, message: str, pos: int, text: str = ""):
        self.pos = pos
        self.column = pos + 1
        self.text = text
        super().__init__(f"{message} (column {pos + 1})")


class Token(NamedTuple):
    kind: str
    value: str
    pos: int


def tokenize(text: str) -> list:
    tokens, pos = [], 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(Token(kind, m.group(), pos))
        pos = m.end()
    tokens.append(Token("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, dims: Mapping[str, int] | None):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0
        self.dims = dict(dims) if dims is not None else None
        self.seen = {}

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, msg, tok=None):
        tok = tok or self.peek()
        raise ParseError(msg, tok.pos, self.text)

    def expect_op(self, op):
        tok = self.peek()
        if tok.kind != "op" or tok.value != op:
            self.error(f"expected {op!r}, found {tok.value or 'end of input'!r}")
        return self.take()

    def parse(self):
        node = self.expr()
        tok = self.peek()
        if tok.kind != "eof":
            self.error(f"unexpected {tok.value!r}")
        return node

    def expr(self):
        acc = self.term()
        while self.peek().kind == "op" and self.peek().value in "+-":
            op = self.take().value
            rhs = self.term()
            acc = ("+" if op == "+" else "-", acc, rhs)
        return acc

    def term(self):
        acc = self.factor()
        while self.peek().kind == "op" and self.peek().value == "*":
            self.take()
            acc = ("*", acc, self.factor())
        return acc

    def exponent(self):
        if not (self.peek().kind == "op" and self.peek().value == "^"):
            return None
        self.take()
        tok = self.peek()
        if tok.kind == "op" and tok.value == "-":
            self.error("negative exponents are not allowed")
        if tok.kind != "number":
            self.error("exponent must be a non-negative integer")
        if not tok.value.isdigit():
            self.error(f"fractional exponent {tok.value!r} is not allowed")
        self.take()
        return int(tok.value)

    def factor(self):
        tok = self.peek()
        if tok.kind == "number":
            self.take()
            if self.peek().kind == "var":
                self.error("implicit multiplication is not allowed; use '*'")
            return ("num", float(tok.value))
        if tok.kind == "var":
            self.take()
            m = _VAR.match(tok.value)
            if m is None:
                self.error(f"unknown variable {tok.value!r}", tok)
            kind, idx = m.group(1), int(m.group(2))
            if self.dims is not None and idx > self.dims.get(kind, 0):
                self.error(f"unknown variable {tok.value!r}", tok)
            self.seen[kind] = max(self.seen.get(kind, 0), idx)
            node = ("var", kind, idx - 1)
            k = self.exponent()
            return node if k is None else ("^", node, k)
        if tok.kind == "op" and tok.value == "(":
            self.take()
            node = self.expr()
            self.expect_op(")")
            k = self.exponent()
            return node if k is None else ("^", node, k)
        if tok.kind == "op" and tok.value == "-":
            self.take()
            return ("neg", self.factor())
        self.error(f"unexpected {tok.value or 'end of input'!r}")


def _build(node, layout):
    tag = node[0]
    if tag == "num":
        return Polynomial.constant(node[1], layout)
    if tag == "var":
        return Polynomial.var(node[1], node[2], dict((b.kind, b.dim) for b in layout)[node[1]], layout)
    if tag == "neg":
        return -_build(node[1], layout)
    if tag == "^":
        return _build(node[1], layout) ** node[2]
    a, b = _build(node[1], layout), _build(node[2], layout)
    if tag == "+":
        return a + b
    if tag == "-":
        return a - b
    return a * b


def parse(text: str, dims: Mapping[str, int] | None = None) -> Polynomial:
    """Parse an expression into a :class:`Polynomial`.

    With ``dims`` (e.g. ``{"x": 2, "u": 1}``) the result uses exactly that
    layout and out-of-range variables are rejected; otherwise each block's
    dimension is the largest index that appears.
    """
    parser = _Parser(text, dims)
    tree = parser.parse()
    if dims is not None:
        layout = merge_blocks([VarBlock(k, d) for k, d in dims.items() if d > 0])
    else:
        layout = merge_blocks([VarBlock(k, d) for k, d in parser.seen.items()])
    return _build(tree, layout)
