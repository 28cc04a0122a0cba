"""Infix printer whose output the parser reads back to the same canonical tree."""
from __future__ import annotations

from fractions import Fraction

from .core import Add, Apply, Const, Expr, Func, Mul, Pow, Symbol


def _num(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if v.denominator == 1:
        return str(v.numerator)
    return f"{v.numerator}/{v.denominator}"


def _exp_str(e: Fraction) -> str:
    if e.denominator == 1:
        return str(e.numerator)
    return f"({e.numerator}/{e.denominator})"


def _is_negative(e: Expr) -> bool:
    if isinstance(e, Const):
        return e.value < 0
    if isinstance(e, Mul) and isinstance(e.factors[0], Const):
        return e.factors[0].value < 0
    return False


def _negate_for_print(e: Expr) -> Expr:
    if isinstance(e, Const):
        return Const(-e.value)
    c = e.factors[0].value
    rest = e.factors[1:]
    if c == -1:
        return rest[0] if len(rest) == 1 else Mul(rest)
    return Mul((Const(-c),) + rest)


def _atom(e: Expr) -> str:
    """Print with parentheses unless e is syntactically atomic."""
    s = to_string(e)
    if isinstance(e, (Symbol, Func, Apply)):
        return s
    if isinstance(e, Const) and not isinstance(e.value, float) and e.value.denominator == 1 and e.value >= 0:
        return s
    if isinstance(e, Pow) and abs(e.exp) == Fraction(1, 2) and e.exp > 0:
        return s
    return f"({s})"


def _pow_str(base: Expr, exp: Fraction) -> str:
    if exp == Fraction(1, 2):
        return f"sqrt({to_string(base)})"
    if exp == 1:
        return _factor(base)
    return f"{_atom(base)}^{_exp_str(exp)}"


def _factor(e: Expr) -> str:
    if isinstance(e, Add):
        return f"({to_string(e)})"
    if isinstance(e, Const) and (isinstance(e.value, float) or e.value.denominator != 1 or e.value < 0):
        return f"({_num(e.value)})"
    if isinstance(e, Mul):
        return f"({to_string(e)})"
    return to_string(e)


def _mul_str(e: Mul) -> str:
    coeff = None
    facs = list(e.factors)
    if isinstance(facs[0], Const):
        coeff = facs.pop(0).value
    num = []
    den = []
    for f in facs:
        if isinstance(f, Pow) and f.exp < 0:
            den.append(_pow_str(f.base, -f.exp))
        else:
            num.append(_pow_str(f.base, f.exp) if isinstance(f, Pow) else _factor(f))
    sign = ""
    if coeff is not None:
        if coeff < 0:
            sign = "-"
            coeff = -coeff
        if coeff == 1 and not isinstance(coeff, float):
            coeff = None
    head = []
    if coeff is not None:
        if isinstance(coeff, Fraction) and coeff.denominator != 1:
            if coeff.numerator != 1 or not num:
                head.append(str(coeff.numerator))
            den.insert(0, str(coeff.denominator))
        else:
            head.append(_num(coeff))
    head.extend(num)
    s = "*".join(head) if head else "1"
    if den:
        s += "/" + (den[0] if len(den) == 1 else "(" + "*".join(den) + ")")
    return sign + s


def to_string(e: Expr) -> str:
    if isinstance(e, Const):
        return _num(e.value)
    if isinstance(e, Symbol):
        return e.name
    if isinstance(e, Func):
        return f"{e.name}({to_string(e.arg)})"
    if isinstance(e, Apply):
        return f"{e.fn.name}({', '.join(to_string(a) for a in e.args)})"
    if isinstance(e, Pow):
        if e.exp < 0:
            return "1/" + _pow_str(e.base, -e.exp)
        return _pow_str(e.base, e.exp)
    if isinstance(e, Mul):
        return _mul_str(e)
    if isinstance(e, Add):
        parts = []
        for i, t in enumerate(e.terms):
            if _is_negative(t):
                n = _negate_for_print(t)
                body = f"({to_string(n)})" if isinstance(n, Add) else to_string(n)
                parts.append(("-" if i == 0 else " - ") + body)
            else:
                parts.append(("" if i == 0 else " + ") + to_string(t))
        return "".join(parts)
    raise TypeError(f"cannot print {type(e).__name__}")
