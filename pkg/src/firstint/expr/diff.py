"""Exact partial derivatives."""
from __future__ import annotations

from functools import lru_cache

from .core import ONE, ZERO, Add, Apply, Const, Expr, Func, Mul, Param, Pow, Var, add, func, mul, neg, power


@lru_cache(maxsize=200_000)
def diff(e: Expr, v: str) -> Expr:
    """Partial derivative of ``e`` with respect to the variable named ``v``."""
    if isinstance(e, Const) or isinstance(e, Param):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.name == v else ZERO
    if isinstance(e, Add):
        return add(*(diff(t, v) for t in e.terms))
    if isinstance(e, Mul):
        terms = []
        fs = e.factors
        for i, f in enumerate(fs):
            d = diff(f, v)
            if d.is_zero:
                continue
            terms.append(mul(*fs[:i], d, *fs[i + 1:]))
        return add(*terms)
    if isinstance(e, Pow):
        d = diff(e.base, v)
        if d.is_zero:
            return ZERO
        return mul(Const(e.exp), power(e.base, e.exp - 1), d)
    if isinstance(e, Func):
        d = diff(e.arg, v)
        if d.is_zero:
            return ZERO
        if e.name == "exp":
            return mul(e, d)
        if e.name == "ln":
            return mul(d, power(e.arg, -1))
        if e.name == "sin":
            return mul(func("cos", e.arg), d)
        if e.name == "cos":
            return neg(mul(func("sin", e.arg), d))
    if isinstance(e, Apply):
        terms = []
        for i, a in enumerate(e.args):
            d = diff(a, v)
            if d.is_zero:
                continue
            terms.append(mul(e.fn.partial(i, e.args), d))
        return add(*terms)
    raise TypeError(f"cannot differentiate {type(e).__name__}")


def gradient(e: Expr, variables) -> list[Expr]:
    return [diff(e, v) for v in variables]
