"""Recursive-descent parser for the infix expression grammar.

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | '+' unary | power
    power   := atom ('^' unary)?          right associative
    atom    := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'

Integer literals are exact rationals, literals with a point or exponent are
floats.  Exponents must fold to a rational constant.
"""
from __future__ import annotations

import re
from fractions import Fraction
from typing import Iterable, Mapping

from .core import Const, Expr, Param, Var, add, func, mul, neg, power, Apply

UNARY_FUNCTIONS = ("exp", "ln", "sqrt", "sin", "cos")


class ParseError(ValueError):
    def __init__(self, message: str, text: str, pos: int):
        self.text = text
        self.pos = pos
        self.message = message
        super().__init__(f"{message} at position {pos}: {text!r}")


class UnknownIdentifierError(ParseError):
    pass


class MalformedExponentError(ParseError):
    pass


_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)|(?P<name>[^\W\d]\w*)|(?P<op>[-+*/^(),]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    out = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            bad = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ParseError(f"unexpected character {text[bad]!r}", text, bad)
        kind = m.lastgroup
        start = m.start(kind)
        out.append((kind, m.group(kind), start))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text, variables, parameters, functions):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.variables = set(variables)
        self.parameters = set(parameters)
        self.functions = dict(functions or {})

    def peek(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, value):
        t = self.take()
        if t[1] != value or t[0] != "op":
            raise ParseError(f"expected {value!r}", self.text, t[2])
        return t

    def parse(self) -> Expr:
        if self.peek()[0] == "end":
            raise ParseError("empty expression", self.text, 0)
        e = self.expr()
        t = self.peek()
        if t[0] != "end":
            raise ParseError(f"unexpected token {t[1]!r}", self.text, t[2])
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            rhs = self.term()
            e = add(e, rhs) if op == "+" else add(e, neg(rhs))
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            rhs = self.unary()
            if op == "*":
                e = mul(e, rhs)
            else:
                if rhs.is_zero:
                    raise ParseError("division by literal zero", self.text, self.toks[self.i - 1][2])
                e = mul(e, power(rhs, -1))
        return e

    def unary(self) -> Expr:
        t = self.peek()
        if t[0] == "op" and t[1] == "-":
            self.take()
            return neg(self.unary())
        if t[0] == "op" and t[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            pos = self.take()[2]
            exponent = self.unary()
            if not isinstance(exponent, Const):
                raise MalformedExponentError("exponent must be a rational constant", self.text, pos)
            value = exponent.value
            if isinstance(value, float):
                if not value.is_integer():
                    raise MalformedExponentError("exponent must be rational, not a float", self.text, pos)
                value = Fraction(int(value))
            if base.is_zero and value < 0:
                raise ParseError("zero to a negative power", self.text, pos)
            return power(base, value)
        return base

    def atom(self) -> Expr:
        kind, value, pos = self.take()
        if kind == "num":
            if re.fullmatch(r"\d+", value):
                return Const(Fraction(int(value)))
            return Const(float(value))
        if kind == "name":
            if self.peek()[1] == "(" and self.peek()[0] == "op":
                return self.call(value, pos)
            if value in self.variables:
                return Var(value)
            if value in self.parameters:
                return Param(value)
            raise UnknownIdentifierError(f"unknown identifier {value!r}", self.text, pos)
        if kind == "op" and value == "(":
            e = self.expr()
            self.expect(")")
            return e
        if kind == "end":
            raise ParseError("unexpected end of input", self.text, pos)
        raise ParseError(f"unexpected token {value!r}", self.text, pos)

    def call(self, name: str, pos: int) -> Expr:
        self.expect("(")
        args = [self.expr()]
        while self.peek()[1] == "," and self.peek()[0] == "op":
            self.take()
            args.append(self.expr())
        self.expect(")")
        if name in UNARY_FUNCTIONS:
            if len(args) != 1:
                raise ParseError(f"{name} takes one argument", self.text, pos)
            return func(name, args[0])
        if name in self.functions:
            fn = self.functions[name]
            if len(args) != fn.arity:
                raise ParseError(f"{name} takes {fn.arity} arguments", self.text, pos)
            return Apply(fn, args)
        raise UnknownIdentifierError(f"unknown function {name!r}", self.text, pos)


def parse(
    text: str,
    variables: Iterable[str] = (),
    parameters: Iterable[str] = (),
    functions: Mapping[str, object] | None = None,
) -> Expr:
    """Parse ``text`` into a canonical expression tree.

    Identifiers must be declared as variables or parameters; ``functions``
    maps extra call names to external function objects (with ``arity``).
    """
    return _Parser(text, variables, parameters, functions).parse()
