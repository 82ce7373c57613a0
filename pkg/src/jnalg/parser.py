"""Recursive-descent parser for the coefficient grammar.

    expr   := term (("+"|"-") term)*
    term   := factor (("*"|"/") factor)*
    factor := "-" factor | base ("^" ["-"] integer)?
    base   := number | ident | "(" expr ")" | func "(" expr ")"
    func   := "exp" | "ln" | "sin" | "cos"
"""
from __future__ import annotations

import re
from typing import Iterable

from . import expr as ex
from .expr import Expr, VarSpace

__all__ = ["ParseError", "UnknownIdentifier", "parse_expr"]

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


class ParseError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnknownIdentifier(ParseError):
    def __init__(self, name: str, offset: int):
        super().__init__(f"unknown identifier {name!r}", offset)
        self.name = name


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    # offsets are byte offsets into the UTF-8 encoding
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", len(text[:pos].encode()))
        kind = m.lastgroup
        if kind != "ws":
            toks.append((kind, m.group(), len(text[:pos].encode())))
        pos = m.end()
    toks.append(("end", "", len(text.encode())))
    return toks


class _Parser:
    def __init__(self, text: str, names: frozenset[str] | None):
        self.toks = _tokenize(text)
        self.i = 0
        self.names = names

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, v, off = self.take()
        if v != value or kind == "end":
            what = "end of input" if kind == "end" else repr(v)
            raise ParseError(f"expected {value!r}, found {what}", off)

    def parse(self) -> Expr:
        e = self.expr()
        kind, v, off = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected {v!r}", off)
        return e

    def expr(self) -> Expr:
        terms = [self.term()]
        while True:
            kind, v, _ = self.peek()
            if kind == "op" and v in "+-":
                self.take()
                t = self.term()
                terms.append(t if v == "+" else ex.neg(t))
            else:
                return ex.add(*terms)

    def term(self) -> Expr:
        factors = [self.factor()]
        while True:
            kind, v, _ = self.peek()
            if kind == "op" and v in "*/":
                self.take()
                f = self.factor()
                factors.append(f if v == "*" else ex.power(f, -1))
            else:
                return ex.mul(*factors)

    def factor(self) -> Expr:
        kind, v, _ = self.peek()
        if kind == "op" and v == "-":
            self.take()
            return ex.neg(self.factor())
        b = self.base()
        kind, v, _ = self.peek()
        if kind == "op" and v == "^":
            self.take()
            sign = 1
            kind, v, off = self.peek()
            if kind == "op" and v == "-":
                self.take()
                sign = -1
            kind, v, off = self.take()
            if kind != "number" or not v.isdigit():
                what = "end of input" if kind == "end" else repr(v)
                raise ParseError(f"expected integer exponent, found {what}", off)
            return ex.power(b, sign * int(v))
        return b

    def base(self) -> Expr:
        kind, v, off = self.take()
        if kind == "number":
            return ex.const(float(v))
        if kind == "ident":
            if v in ex.FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return {"exp": ex.exp, "ln": ex.ln, "sin": ex.sin, "cos": ex.cos}[v](arg)
            if self.names is not None and v not in self.names:
                raise UnknownIdentifier(v, off)
            return ex.var(v)
        if kind == "op" and v == "(":
            e = self.expr()
            self.expect(")")
            return e
        what = "end of input" if kind == "end" else repr(v)
        raise ParseError(f"unexpected {what}", off)


def parse_expr(text: str, vars: VarSpace | Iterable[str] | None = None) -> Expr:
    """Parse ``text``; identifiers must belong to ``vars`` when it is given."""
    names = None if vars is None else frozenset(vars)
    return _Parser(text, names).parse()
