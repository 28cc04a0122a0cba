"""Numeric evaluation: a checked interpreter and a compiler for hot loops."""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Mapping, Sequence

from .core import Add, Apply, Const, Expr, Func, Mul, Pow, Symbol


class EvalError(ArithmeticError):
    def __init__(self, message: str, node: Expr):
        self.node = node
        super().__init__(f"{message} in subexpression {node}")


class UnboundSymbolError(EvalError):
    pass


class EvalDivisionByZero(EvalError):
    pass


class EvalDomainError(EvalError):
    pass


def rpow(b: float, e: Fraction | float) -> float:
    """Real power with odd-root support for negative bases."""
    if isinstance(e, Fraction) and e.denominator == 1:
        return b ** int(e)
    if b < 0:
        if isinstance(e, Fraction) and e.denominator % 2 == 1:
            r = (-b) ** float(e)
            return -r if e.numerator % 2 else r
        raise ValueError("fractional power of a negative number")
    return b ** float(e)


def _apply_func(name: str, x: float) -> float:
    if name == "exp":
        return math.exp(x)
    if name == "ln":
        return math.log(x)
    if name == "sin":
        return math.sin(x)
    return math.cos(x)


def evaluate(e: Expr, binding: Mapping[str, float], functions: Mapping[str, object] | None = None) -> float:
    """Evaluate with errors that name the offending subtree."""
    memo: dict[int, float] = {}
    functions = functions or {}

    def go(x: Expr) -> float:
        k = id(x)
        if k in memo:
            return memo[k]
        if isinstance(x, Const):
            r = float(x.value)
        elif isinstance(x, Symbol):
            if x.name not in binding:
                raise UnboundSymbolError(f"unbound symbol {x.name!r}", x)
            r = float(binding[x.name])
        elif isinstance(x, Add):
            r = math.fsum(go(t) for t in x.terms)
        elif isinstance(x, Mul):
            r = 1.0
            for f in x.factors:
                r *= go(f)
        elif isinstance(x, Pow):
            b = go(x.base)
            if b == 0 and x.exp < 0:
                raise EvalDivisionByZero("division by zero", x)
            if b < 0 and x.exp.denominator % 2 == 0:
                raise EvalDomainError("even root of a negative number", x)
            try:
                r = rpow(b, x.exp)
            except OverflowError as exc:
                raise EvalDomainError("overflow", x) from exc
        elif isinstance(x, Func):
            a = go(x.arg)
            if x.name == "ln" and a <= 0:
                raise EvalDomainError("logarithm of a non-positive number", x)
            try:
                r = _apply_func(x.name, a)
            except OverflowError as exc:
                raise EvalDomainError("overflow", x) from exc
        elif isinstance(x, Apply):
            args = [go(a) for a in x.args]
            try:
                r = float(functions.get(x.fn.name, x.fn.evaluate)(args))
            except ArithmeticError as exc:
                raise EvalDomainError(str(exc), x) from exc
        else:
            raise TypeError(type(x).__name__)
        if not math.isfinite(r):
            raise EvalDomainError("non-finite value", x)
        memo[k] = r
        return r

    return go(e)


def magnitude(e: Expr, binding: Mapping[str, float]) -> float:
    """Evaluation with every sum replaced by the sum of absolute values.

    This is the local scale of cancellation used by the zero test.
    """
    memo: dict[int, float] = {}

    def go(x: Expr) -> float:
        k = id(x)
        if k in memo:
            return memo[k]
        if isinstance(x, Add):
            r = math.fsum(go(t) for t in x.terms)
        elif isinstance(x, Mul):
            r = 1.0
            for f in x.factors:
                r *= go(f)
        elif isinstance(x, Pow):
            r = abs(evaluate(x, binding)) if x.exp < 0 or x.exp.denominator != 1 else go(x.base) ** int(x.exp)
        else:
            r = abs(evaluate(x, binding))
        memo[k] = r
        return r

    return go(e)


# ---------------------------------------------------------------------------
# compilation
# ---------------------------------------------------------------------------

def compile_exprs(exprs: Sequence[Expr], argnames: Sequence[str], functions: Mapping[str, object] | None = None):
    """Compile expressions into ``f(*args) -> tuple`` with shared subtrees.

    ``functions`` overrides the evaluator of external functions by name (used
    to route implicit functions through a caller-owned branch tracker).
    Raises ZeroDivisionError / ValueError / OverflowError like plain Python.
    """
    functions = functions or {}
    lines: list[str] = []
    names: dict[Expr, str] = {}
    env: dict[str, object] = {"math": math, "_rpow": rpow, "_exp": math.exp, "_ln": math.log,
                              "_sin": math.sin, "_cos": math.cos}
    argset = {a: f"a{i}" for i, a in enumerate(argnames)}
    counter = [0]

    def fresh() -> str:
        counter[0] += 1
        return f"t{counter[0]}"

    def emit(x: Expr) -> str:
        if x in names:
            return names[x]
        if isinstance(x, Const):
            return repr(float(x.value))
        if isinstance(x, Symbol):
            if x.name not in argset:
                raise UnboundSymbolError(f"unbound symbol {x.name!r}", x)
            return argset[x.name]
        if isinstance(x, Add):
            code = " + ".join(emit(t) for t in x.terms)
        elif isinstance(x, Mul):
            code = " * ".join(emit(f) for f in x.factors)
        elif isinstance(x, Pow):
            b = emit(x.base)
            if x.exp == -1:
                code = f"1.0 / {b}"
            elif x.exp.denominator == 1 and x.exp > 0:
                code = f"{b} ** {int(x.exp)}"
            elif x.exp.denominator == 1:
                code = f"1.0 / {b} ** {-int(x.exp)}"
            elif x.exp == Fraction(1, 2):
                code = f"math.sqrt({b})"
            elif x.exp == Fraction(-1, 2):
                code = f"1.0 / math.sqrt({b})"
            else:
                key = f"_q{counter[0]}x"
                counter[0] += 1
                env[key] = x.exp
                code = f"_rpow({b}, {key})"
        elif isinstance(x, Func):
            code = f"_{x.name}({emit(x.arg)})"
        elif isinstance(x, Apply):
            key = f"_f{id(x.fn)}"
            env[key] = functions.get(x.fn.name, x.fn.evaluate)
            code = f"{key}([{', '.join(emit(a) for a in x.args)}])"
        else:
            raise TypeError(type(x).__name__)
        n = fresh()
        lines.append(f"    {n} = {code}")
        names[x] = n
        return n

    outs = [emit(e) for e in exprs]
    src = "def _f({}):\n".format(", ".join(argset[a] for a in argnames))
    src += "\n".join(lines) + ("\n" if lines else "")
    src += "    return ({}{})\n".format(", ".join(outs), "," if len(outs) == 1 else "")
    exec(compile(src, "<firstint-compiled>", "exec"), env)
    fn = env["_f"]
    fn.source = src
    return fn


def compile_expr(e: Expr, argnames: Sequence[str], functions=None):
    f = compile_exprs([e], argnames, functions)

    def g(*args):
        return f(*args)[0]

    return g
