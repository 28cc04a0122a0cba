"""Expression tree nodes and canonicalizing constructors.

Trees are immutable and hashable.  The module level constructors ``add``,
``mul``, ``power`` and ``func`` assume canonical children and return a
canonical node, so building an expression bottom-up through them (which is
what ``simplify`` does) yields a normal form: flattened sums and products,
folded exact constants, collected like terms and like bases.
"""
from __future__ import annotations

from fractions import Fraction
from math import isfinite
from typing import Callable, Iterable, Mapping, Sequence, Union

Number = Union[Fraction, float]

FUNCTIONS = ("exp", "ln", "sin", "cos")


def as_number(value) -> Number:
    """Coerce ints to Fraction; keep Fraction and float."""
    if isinstance(value, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return value
    raise TypeError(f"not a number: {value!r}")


class Expr:
    __slots__ = ("_hash", "_key")

    # -- structural identity -------------------------------------------------
    def _ident(self) -> tuple:
        raise NotImplementedError

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Expr) or type(self) is not type(other):
            return False
        return self._ident() == other._ident()

    def __hash__(self):
        try:
            return self._hash
        except AttributeError:
            h = hash((type(self).__name__,) + self._ident())
            object.__setattr__(self, "_hash", h)
            return h

    def __setattr__(self, name, value):
        raise AttributeError("Expr nodes are immutable")

    def sort_key(self) -> tuple:
        try:
            return self._key
        except AttributeError:
            k = self._make_key()
            object.__setattr__(self, "_key", k)
            return k

    def _make_key(self) -> tuple:
        raise NotImplementedError

    def children(self) -> tuple["Expr", ...]:
        return ()

    # -- arithmetic sugar (canonical results) ---------------------------------
    def __add__(self, other):
        return add(self, to_expr(other))

    def __radd__(self, other):
        return add(to_expr(other), self)

    def __sub__(self, other):
        return add(self, neg(to_expr(other)))

    def __rsub__(self, other):
        return add(to_expr(other), neg(self))

    def __mul__(self, other):
        return mul(self, to_expr(other))

    def __rmul__(self, other):
        return mul(to_expr(other), self)

    def __truediv__(self, other):
        return mul(self, power(to_expr(other), -1))

    def __rtruediv__(self, other):
        return mul(to_expr(other), power(self, -1))

    def __neg__(self):
        return neg(self)

    def __pow__(self, exponent):
        return power(self, exponent)

    def __str__(self):
        from .printing import to_string

        return to_string(self)

    def __repr__(self):
        return f"{type(self).__name__}({str(self)!r})"

    @property
    def is_zero(self) -> bool:
        return isinstance(self, Const) and self.value == 0

    @property
    def is_one(self) -> bool:
        return isinstance(self, Const) and self.value == 1


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value):
        value = as_number(value)
        if isinstance(value, float) and not isfinite(value):
            raise ValueError("non-finite constant")
        object.__setattr__(self, "value", value)

    def _ident(self):
        return (type(self.value).__name__, self.value)

    def _make_key(self):
        return (0, float(self.value), str(self.value))

    @property
    def exact(self) -> bool:
        return isinstance(self.value, Fraction)


class Symbol(Expr):
    __slots__ = ("name",)
    _rank = 1

    def __init__(self, name: str):
        object.__setattr__(self, "name", name)

    def _ident(self):
        return (self.name,)

    def _make_key(self):
        return (self._rank, self.name)


class Param(Symbol):
    """A named constant (k, p, beta, ...); differentiates to zero."""

    __slots__ = ()
    _rank = 1


class Var(Symbol):
    """A coordinate, velocity, or the time symbol."""

    __slots__ = ()
    _rank = 2


class Func(Expr):
    __slots__ = ("name", "arg")

    def __init__(self, name: str, arg: Expr):
        if name not in FUNCTIONS:
            raise ValueError(f"unknown function {name!r}")
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "arg", arg)

    def _ident(self):
        return (self.name, self.arg)

    def _make_key(self):
        return (3, self.name, self.arg.sort_key())

    def children(self):
        return (self.arg,)


class Apply(Expr):
    """Application of an externally defined function (implicit root, path integral)."""

    __slots__ = ("fn", "args")

    def __init__(self, fn, args: Sequence[Expr]):
        object.__setattr__(self, "fn", fn)
        object.__setattr__(self, "args", tuple(args))

    def _ident(self):
        return (self.fn.name, id(self.fn), self.args)

    def _make_key(self):
        return (4, self.fn.name, tuple(a.sort_key() for a in self.args))

    def children(self):
        return self.args


class Pow(Expr):
    __slots__ = ("base", "exp")

    def __init__(self, base: Expr, exp: Fraction):
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "exp", Fraction(exp))

    def _ident(self):
        return (self.base, self.exp)

    def _make_key(self):
        return (5, self.base.sort_key(), float(self.exp))

    def children(self):
        return (self.base,)


class Mul(Expr):
    __slots__ = ("factors",)

    def __init__(self, factors: Sequence[Expr]):
        object.__setattr__(self, "factors", tuple(factors))

    def _ident(self):
        return self.factors

    def _make_key(self):
        return (6, tuple(f.sort_key() for f in self.factors))

    def children(self):
        return self.factors


class Add(Expr):
    __slots__ = ("terms",)

    def __init__(self, terms: Sequence[Expr]):
        object.__setattr__(self, "terms", tuple(terms))

    def _ident(self):
        return self.terms

    def _make_key(self):
        return (7, tuple(t.sort_key() for t in self.terms))

    def children(self):
        return self.terms


ZERO = Const(0)
ONE = Const(1)


def to_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    return Const(value)


# ---------------------------------------------------------------------------
# canonical constructors
# ---------------------------------------------------------------------------

def _split_coeff(term: Expr) -> tuple[Number, Expr]:
    if isinstance(term, Const):
        return term.value, ONE
    if isinstance(term, Mul) and isinstance(term.factors[0], Const):
        rest = term.factors[1:]
        return term.factors[0].value, rest[0] if len(rest) == 1 else Mul(rest)
    return Fraction(1), term


def _with_coeff(c: Number, rest: Expr) -> Expr:
    if c == 0:
        return ZERO
    if isinstance(rest, Const):
        return Const(c * rest.value)
    if c == 1:
        return rest
    if isinstance(rest, Mul):
        return Mul((Const(c),) + rest.factors)
    return Mul((Const(c), rest))


def add(*terms: Expr) -> Expr:
    const: Number = Fraction(0)
    collected: dict[Expr, Number] = {}
    order: list[Expr] = []
    stack = list(terms)
    flat: list[Expr] = []
    for t in stack:
        if isinstance(t, Add):
            flat.extend(t.terms)
        else:
            flat.append(t)
    for t in flat:
        c, rest = _split_coeff(t)
        if rest is ONE or (isinstance(rest, Const) and rest.value == 1):
            const = const + c
            continue
        if rest in collected:
            collected[rest] = collected[rest] + c
        else:
            collected[rest] = c
            order.append(rest)
    out = [_with_coeff(collected[r], r) for r in sorted(order, key=Expr.sort_key) if collected[r] != 0]
    out = [t for t in out if not t.is_zero]
    if const != 0:
        out.append(Const(const))
    if not out:
        return ZERO
    if len(out) == 1:
        return out[0]
    return Add(out)


def neg(e: Expr) -> Expr:
    return mul(Const(-1), e)


def _exact_root(value: Fraction, q: int) -> Fraction | None:
    """Exact q-th root of a non-negative rational, or None."""
    if value < 0:
        return None

    def iroot(n: int) -> int | None:
        if n < 2:
            return n
        r = round(n ** (1.0 / q))
        for cand in (r - 1, r, r + 1):
            if cand >= 0 and cand**q == n:
                return cand
        lo, hi = 0, n
        while lo <= hi:
            mid = (lo + hi) // 2
            p = mid**q
            if p == n:
                return mid
            if p < n:
                lo = mid + 1
            else:
                hi = mid - 1
        return None

    a, b = iroot(value.numerator), iroot(value.denominator)
    if a is None or b is None:
        return None
    return Fraction(a, b)


def _const_power(c: Number, e: Fraction) -> Expr | None:
    if isinstance(c, float):
        if c == 0 and e < 0:
            return None
        if c < 0 and e.denominator != 1:
            return None
        return Const(c ** float(e)) if e.denominator != 1 else Const(c ** int(e))
    if e.denominator == 1:
        if c == 0 and e < 0:
            return None
        return Const(c ** int(e))
    if c < 0:
        return None
    root = _exact_root(c, e.denominator)
    if root is None:
        return None
    if root == 0 and e < 0:
        return None
    return Const(root ** e.numerator)


def power(base: Expr, exponent) -> Expr:
    e = Fraction(exponent) if not isinstance(exponent, float) else Fraction(exponent).limit_denominator(10**6)
    if isinstance(exponent, float) and Fraction(exponent) != e:
        raise ValueError("exponent must be rational")
    if e == 0:
        return ONE
    if e == 1:
        return base
    if isinstance(base, Const):
        folded = _const_power(base.value, e)
        if folded is not None:
            return folded
        return Pow(base, e)
    if isinstance(base, Pow) and e.denominator == 1:
        return power(base.base, base.exp * e)
    if isinstance(base, Mul) and e.denominator == 1:
        return mul(*(power(f, e) for f in base.factors))
    if isinstance(base, Func) and base.name == "exp":
        return func("exp", mul(Const(e), base.arg))
    return Pow(base, e)


def mul(*factors: Expr) -> Expr:
    coeff: Number = Fraction(1)
    bases: dict[Expr, Fraction] = {}
    order: list[Expr] = []
    exp_args: list[Expr] = []
    flat: list[Expr] = []
    for f in factors:
        if isinstance(f, Mul):
            flat.extend(f.factors)
        else:
            flat.append(f)
    for f in flat:
        if isinstance(f, Const):
            coeff = coeff * f.value
            continue
        if isinstance(f, Func) and f.name == "exp":
            exp_args.append(f.arg)
            continue
        if isinstance(f, Pow):
            b, e = f.base, f.exp
        else:
            b, e = f, Fraction(1)
        if b in bases:
            bases[b] += e
        else:
            bases[b] = e
            order.append(b)
    if coeff == 0:
        return ZERO
    out: list[Expr] = []
    for b in order:
        p = power(b, bases[b])
        if isinstance(p, Const):
            coeff = coeff * p.value
        elif isinstance(p, Mul):
            for g in p.factors:
                if isinstance(g, Const):
                    coeff = coeff * g.value
                else:
                    out.append(g)
        else:
            out.append(p)
    if exp_args:
        arg = add(*exp_args)
        ex = func("exp", arg)
        if isinstance(ex, Const):
            coeff = coeff * ex.value
        else:
            out.append(ex)
    if coeff == 0:
        return ZERO
    # a second pass is needed only when powers regrouped (rare); keep it cheap
    if len(out) != len(set(_base_of(g) for g in out)):
        return mul(Const(coeff), *out)
    out.sort(key=Expr.sort_key)
    if not out:
        return Const(coeff)
    if coeff == 1:
        return out[0] if len(out) == 1 else Mul(out)
    return Mul([Const(coeff)] + out)


def _base_of(e: Expr) -> Expr:
    if isinstance(e, Pow):
        return e.base
    if isinstance(e, Func) and e.name == "exp":
        return Var("\x00exp")
    return e


def func(name: str, arg: Expr) -> Expr:
    if name == "sqrt":
        return power(arg, Fraction(1, 2))
    if isinstance(arg, Const):
        v = arg.value
        if name == "exp" and v == 0:
            return ONE
        if name == "ln" and v == 1:
            return ZERO
        if name == "sin" and v == 0:
            return ZERO
        if name == "cos" and v == 0:
            return ONE
        if isinstance(v, float):
            import math

            try:
                return Const({"exp": math.exp, "ln": math.log, "sin": math.sin, "cos": math.cos}[name](v))
            except (ValueError, OverflowError):
                pass
    if name == "ln" and isinstance(arg, Func) and arg.name == "exp":
        return arg.arg
    return Func(name, arg)


def apply(fn, args: Sequence[Expr]) -> Expr:
    return Apply(fn, args)


# ---------------------------------------------------------------------------
# traversal helpers
# ---------------------------------------------------------------------------

def rebuild(e: Expr, leaf: Callable[[Expr], Expr | None]) -> Expr:
    """Bottom-up rebuild through the canonical constructors.

    ``leaf`` may return a replacement for any node (checked before recursing);
    None means recurse/keep.
    """
    memo: dict[Expr, Expr] = {}

    def go(x: Expr) -> Expr:
        if x in memo:
            return memo[x]
        r = leaf(x)
        if r is None:
            if isinstance(x, Add):
                r = add(*(go(t) for t in x.terms))
            elif isinstance(x, Mul):
                r = mul(*(go(f) for f in x.factors))
            elif isinstance(x, Pow):
                r = power(go(x.base), x.exp)
            elif isinstance(x, Func):
                r = func(x.name, go(x.arg))
            elif isinstance(x, Apply):
                r = Apply(x.fn, [go(a) for a in x.args])
            else:
                r = x
        memo[x] = r
        return r

    return go(e)


def simplify(e: Expr) -> Expr:
    return rebuild(e, lambda x: None)


def substitute(e: Expr, mapping: Mapping[str, object]) -> Expr:
    """Replace symbols (by name) with expressions or numbers; result canonical."""
    repl = {k: to_expr(v) for k, v in mapping.items()}

    def leaf(x):
        if isinstance(x, Symbol) and x.name in repl:
            return repl[x.name]
        return None

    return rebuild(e, leaf)


def free_symbols(e: Expr) -> set[str]:
    out: set[str] = set()
    seen: set[int] = set()
    stack = [e]
    while stack:
        x = stack.pop()
        if id(x) in seen:
            continue
        seen.add(id(x))
        if isinstance(x, Symbol):
            out.add(x.name)
        stack.extend(x.children())
    return out


def walk(e: Expr) -> Iterable[Expr]:
    seen: set[int] = set()
    stack = [e]
    while stack:
        x = stack.pop()
        if id(x) in seen:
            continue
        seen.add(id(x))
        yield x
        stack.extend(x.children())


def count_nodes(e: Expr) -> int:
    return sum(1 for _ in walk(e))


def sum_exprs(items: Iterable[Expr]) -> Expr:
    return add(*list(items))


def product(items: Iterable[Expr]) -> Expr:
    return mul(*list(items))
