"""Exact multivariate polynomials and rational normal forms.

A ``Polynomial`` is a sparse map from exponent tuples to Fractions over a
fixed tuple of generator names.  ``RationalForm`` keeps its denominator as a
product of normalized primitive factors, which makes common denominators a
matter of taking maxima of multiplicities instead of polynomial gcds.
"""
from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import Mapping, Sequence

from .core import ONE, Add, Apply, Const, Expr, Func, Mul, Pow, Symbol, Var, add, mul, power
from .printing import to_string


class NonRationalError(ValueError):
    def __init__(self, node: Expr):
        self.node = node
        super().__init__(f"non-rational content: {to_string(node)}")


def _lcm(a: int, b: int) -> int:
    return a * b // gcd(a, b)


class Polynomial:
    __slots__ = ("gens", "terms")

    def __init__(self, gens: Sequence[str], terms: Mapping[tuple, Fraction] | None = None):
        self.gens = tuple(gens)
        self.terms = {m: Fraction(c) for m, c in (terms or {}).items() if c != 0}

    # constructors
    @classmethod
    def const(cls, gens, c) -> "Polynomial":
        return cls(gens, {(0,) * len(gens): Fraction(c)} if c != 0 else {})

    @classmethod
    def gen(cls, gens, name: str) -> "Polynomial":
        i = list(gens).index(name)
        m = [0] * len(gens)
        m[i] = 1
        return cls(gens, {tuple(m): Fraction(1)})

    def _new(self, terms) -> "Polynomial":
        p = Polynomial.__new__(Polynomial)
        p.gens = self.gens
        p.terms = terms
        return p

    # queries
    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(not any(m) for m in self.terms)

    def constant_value(self) -> Fraction:
        return self.terms.get((0,) * len(self.gens), Fraction(0))

    def total_degree(self) -> int:
        return max((sum(m) for m in self.terms), default=0)

    def degree(self, name: str) -> int:
        i = self.gens.index(name)
        return max((m[i] for m in self.terms), default=0)

    def leading(self):
        m = max(self.terms)
        return m, self.terms[m]

    def __len__(self):
        return len(self.terms)

    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return self.gens == other.gens and self.terms == other.terms
        if isinstance(other, (int, Fraction)):
            return self.terms == Polynomial.const(self.gens, other).terms
        return NotImplemented

    def __hash__(self):
        return hash((self.gens, frozenset(self.terms.items())))

    def key(self) -> tuple:
        return tuple(sorted(self.terms.items()))

    # arithmetic
    def __add__(self, other):
        if not isinstance(other, Polynomial):
            other = Polynomial.const(self.gens, other)
        t = dict(self.terms)
        for m, c in other.terms.items():
            v = t.get(m, 0) + c
            if v:
                t[m] = v
            else:
                t.pop(m, None)
        return self._new(t)

    __radd__ = __add__

    def __neg__(self):
        return self._new({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        if not isinstance(other, Polynomial):
            other = Polynomial.const(self.gens, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "Polynomial":
        c = Fraction(c)
        if c == 0:
            return self._new({})
        return self._new({m: v * c for m, v in self.terms.items()})

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            return self.scale(other)
        t: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = tuple(a + b for a, b in zip(m1, m2))
                v = t.get(m, 0) + c1 * c2
                if v:
                    t[m] = v
                else:
                    t.pop(m, None)
        return self._new(t)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative polynomial power")
        result = Polynomial.const(self.gens, 1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def mul_monomial(self, mono: tuple, c: Fraction) -> "Polynomial":
        return self._new({tuple(a + b for a, b in zip(m, mono)): v * c for m, v in self.terms.items()})

    def derivative(self, name: str) -> "Polynomial":
        i = self.gens.index(name)
        t = {}
        for m, c in self.terms.items():
            if m[i]:
                mm = list(m)
                mm[i] -= 1
                t[tuple(mm)] = c * m[i]
        return self._new(t)

    def evaluate(self, point: Mapping[str, float]) -> float:
        vals = [point[g] for g in self.gens]
        total = 0.0
        for m, c in self.terms.items():
            term = float(c)
            for v, k in zip(vals, m):
                if k:
                    term *= v**k
            total += term
        return total

    def content(self) -> Fraction:
        """Positive rational content (gcd of numerators over lcm of denominators)."""
        if not self.terms:
            return Fraction(0)
        g = 0
        d = 1
        for c in self.terms.values():
            g = gcd(g, c.numerator)
            d = _lcm(d, c.denominator)
        return Fraction(g, d)

    def monomial_content(self) -> tuple:
        return tuple(min(m[i] for m in self.terms) for i in range(len(self.gens)))

    def primitive(self) -> tuple[Fraction, "Polynomial"]:
        """Split into (c, P) with P primitive integral and positive leading coefficient."""
        c = self.content()
        if self.leading()[1] < 0:
            c = -c
        return c, self.scale(1 / c)

    def divide_exact(self, other: "Polynomial") -> "Polynomial | None":
        """Quotient if ``other`` divides ``self`` exactly, else None."""
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        if self.is_zero():
            return self._new({})
        lm, lc = other.leading()
        r = dict(self.terms)
        q: dict = {}
        others = list(other.terms.items())
        while r:
            m = max(r)
            if any(a < b for a, b in zip(m, lm)):
                return None
            c = r[m] / lc
            d = tuple(a - b for a, b in zip(m, lm))
            q[d] = c
            for mo, co in others:
                k = tuple(a + b for a, b in zip(mo, d))
                v = r.get(k, 0) - c * co
                if v:
                    r[k] = v
                else:
                    r.pop(k, None)
        return self._new(q)

    def substitute_power(self, i: int, q: int, repl: "Polynomial") -> "Polynomial":
        """Reduce exponents of generator ``i`` modulo ``q`` using gen_i^q = repl."""
        if all(m[i] < q for m in self.terms):
            return self
        out = self._new({})
        cache = {0: Polynomial.const(self.gens, 1)}
        for m, c in self.terms.items():
            k, r = divmod(m[i], q)
            if k == 0:
                out = out + self._new({m: c})
                continue
            if k not in cache:
                cache[k] = repl**k
            mm = list(m)
            mm[i] = r
            out = out + cache[k].mul_monomial(tuple(mm), c)
        return out

    def to_expr(self, symbols: Mapping[str, Expr] | None = None) -> Expr:
        symbols = symbols or {}
        syms = [symbols.get(g, Var(g)) for g in self.gens]
        terms = []
        for m in sorted(self.terms, reverse=True):
            fs = [Const(self.terms[m])]
            for s, k in zip(syms, m):
                if k:
                    fs.append(power(s, k))
            terms.append(mul(*fs))
        return add(*terms)

    def __repr__(self):
        return f"Polynomial({to_string(self.to_expr())}, gens={self.gens})"


# ---------------------------------------------------------------------------
# rational forms
# ---------------------------------------------------------------------------

class BudgetExceeded(RuntimeError):
    """Raised when an intermediate numerator exceeds the builder's term budget."""


class RationalForm:
    """num / prod(factor ** mult), factors are primitive normalized polynomials."""

    __slots__ = ("num", "den")

    def __init__(self, num: Polynomial, den: dict | None = None):
        self.num = num
        self.den = den or {}

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def denominator(self) -> Polynomial:
        d = Polynomial.const(self.num.gens, 1)
        for f, k in self.den.values():
            d = d * f**k
        return d


class RationalBuilder:
    """Converts expression trees to RationalForm over a generator set.

    Transcendental nodes and external applications become opaque generators
    (unless ``strict``); q-th roots of polynomials become generators with the
    relation s^q = base.
    """

    def __init__(self, gens: Sequence[str] = (), strict: bool = False, budget: int | None = None):
        self.gens: list[str] = list(gens)
        self.atoms: dict[Expr, str] = {}
        self.relations: list[tuple[int, int, Expr]] = []
        self.strict = strict
        self.factors: dict[tuple, Polynomial] = {}
        self._frozen = False
        self._memo: dict[Expr, RationalForm] = {}
        self._rel_polys: list[tuple[int, int, Polynomial]] = []
        self.symbols: dict[str, Symbol] = {}
        self.budget = budget

    # -- generator discovery --------------------------------------------------
    def collect(self, e: Expr) -> None:
        if self._frozen:
            raise RuntimeError("builder already used for conversion")
        stack = [e]
        seen = set()
        while stack:
            x = stack.pop()
            if id(x) in seen:
                continue
            seen.add(id(x))
            if isinstance(x, Symbol):
                self.symbols.setdefault(x.name, x)
                if x.name not in self.gens:
                    self.gens.append(x.name)
            elif isinstance(x, (Func, Apply)):
                if self.strict:
                    raise NonRationalError(x)
                if x not in self.atoms:
                    self.atoms[x] = f"@{len(self.atoms)}"
                    self.gens.append(self.atoms[x])
            elif isinstance(x, Pow) and x.exp.denominator != 1:
                if self.strict:
                    raise NonRationalError(x)
                root = Pow(x.base, Fraction(1, x.exp.denominator))
                if root not in self.atoms:
                    self.atoms[root] = f"@{len(self.atoms)}"
                    self.gens.append(self.atoms[root])
                    if _is_polynomial_tree(x.base):
                        self.relations.append((len(self.gens) - 1, x.exp.denominator, x.base))
                stack.append(x.base)
            else:
                stack.extend(x.children())

    def _freeze(self):
        if self._frozen:
            return
        self._frozen = True
        self._rel_polys = []
        for i, q, base in self.relations:
            rf = self._convert(base)
            if rf.den:
                continue
            self._rel_polys.append((i, q, rf.num))

    # -- polynomial helpers ---------------------------------------------------
    def _reduce(self, p: Polynomial) -> Polynomial:
        for i, q, repl in self._rel_polys:
            p = p.substitute_power(i, q, repl)
        if self.budget is not None and len(p) > self.budget:
            raise BudgetExceeded(len(p))
        return p

    def _const(self, c) -> Polynomial:
        return Polynomial.const(self.gens, c)

    def _factorize(self, p: Polynomial) -> tuple[Fraction, Polynomial, dict]:
        """Split p into (c, {key: (factor, mult)}) with p = c * prod(factor ** mult)."""
        out: dict = {}
        c, prim = p.primitive()
        mono = prim.monomial_content()
        if any(mono):
            prim = prim.mul_monomial(tuple(-k for k in mono), Fraction(1))
            for i, k in enumerate(mono):
                if k:
                    g = Polynomial.gen(self.gens, self.gens[i])
                    out[g.key()] = (g, k)
        if not prim.is_constant():
            for key, f in list(self.factors.items()):
                while len(f) <= len(prim) and not prim.is_constant():
                    q = prim.divide_exact(f)
                    if q is None:
                        break
                    prim = q
                    g, k = out.get(key, (f, 0))
                    out[key] = (f, k + 1)
            if not prim.is_constant():
                c2, prim = prim.primitive()
                c = c * c2
                key = prim.key()
                self.factors.setdefault(key, prim)
                g, k = out.get(key, (prim, 0))
                out[key] = (prim, k + 1)
            else:
                c = c * prim.constant_value()
        else:
            c = c * prim.constant_value()
        return c, {key: v for key, v in out.items()}

    def _cancel(self, num: Polynomial, den: dict) -> RationalForm:
        den = dict(den)
        for key in list(den):
            f, k = den[key]
            while k and not num.is_zero():
                q = num.divide_exact(f)
                if q is None:
                    break
                num = q
                k -= 1
            if k:
                den[key] = (f, k)
            else:
                del den[key]
        if num.is_zero():
            den = {}
        return RationalForm(num, den)

    def _add(self, a: RationalForm, b: RationalForm) -> RationalForm:
        if a.is_zero():
            return b
        if b.is_zero():
            return a
        keys = set(a.den) | set(b.den)
        lcm = {}
        ca = Polynomial.const(self.gens, 1)
        cb = Polynomial.const(self.gens, 1)
        for key in keys:
            fa, ka = a.den.get(key, (None, 0))
            fb, kb = b.den.get(key, (None, 0))
            f = fa if fa is not None else fb
            k = max(ka, kb)
            lcm[key] = (f, k)
            if k > ka:
                ca = ca * f ** (k - ka)
            if k > kb:
                cb = cb * f ** (k - kb)
        num = self._reduce(a.num * ca + b.num * cb)
        return self._cancel(num, lcm)

    def _mul(self, a: RationalForm, b: RationalForm) -> RationalForm:
        if a.is_zero() or b.is_zero():
            return RationalForm(self._const(0))
        den = dict(a.den)
        for key, (f, k) in b.den.items():
            g, j = den.get(key, (f, 0))
            den[key] = (f, j + k)
        num = self._reduce(a.num * b.num)
        return self._cancel(num, den)

    def _inverse(self, a: RationalForm, node: Expr) -> RationalForm:
        if a.is_zero():
            raise ZeroDivisionError(f"division by an expression that is identically zero: {to_string(node)}")
        num = Polynomial.const(self.gens, 1)
        for f, k in a.den.values():
            num = num * f**k
        c, fac = self._factorize(a.num)
        return self._cancel(self._reduce(num.scale(1 / c)), fac)

    def _power(self, a: RationalForm, n: int, node: Expr) -> RationalForm:
        if n < 0:
            a = self._inverse(a, node)
            n = -n
        result = RationalForm(self._const(1))
        base = a
        while n:
            if n & 1:
                result = self._mul(result, base)
            n >>= 1
            if n:
                base = self._mul(base, base)
        return result

    # -- conversion -------------------------------------------------------------
    def convert(self, e: Expr) -> RationalForm:
        if not self._frozen:
            self.collect(e)
            self._freeze()
        return self._convert(e)

    def _convert(self, e: Expr) -> RationalForm:
        if e in self._memo:
            return self._memo[e]
        if isinstance(e, Const):
            r = RationalForm(self._const(Fraction(e.value)))
        elif isinstance(e, Symbol):
            r = RationalForm(Polynomial.gen(self.gens, e.name))
        elif isinstance(e, (Func, Apply)):
            if self.strict:
                raise NonRationalError(e)
            r = RationalForm(Polynomial.gen(self.gens, self.atoms[e]))
        elif isinstance(e, Add):
            r = RationalForm(self._const(0))
            for t in e.terms:
                r = self._add(r, self._convert(t))
        elif isinstance(e, Mul):
            r = RationalForm(self._const(1))
            for f in e.factors:
                r = self._mul(r, self._convert(f))
        elif isinstance(e, Pow):
            p, q = e.exp.numerator, e.exp.denominator
            if q == 1:
                r = self._power(self._convert(e.base), p, e)
            else:
                if self.strict:
                    raise NonRationalError(e)
                root = Pow(e.base, Fraction(1, q))
                s = RationalForm(Polynomial.gen(self.gens, self.atoms[root]))
                has_rel = any(self.gens[i] == self.atoms[root] for i, _, _ in self._rel_polys)
                if has_rel:
                    a, rem = divmod(p, q)
                    r = self._mul(self._power(self._convert(e.base), a, e), self._power(s, rem, e))
                else:
                    r = self._power(s, p, e)
        else:
            raise TypeError(type(e).__name__)
        self._memo[e] = r
        return r


def _is_polynomial_tree(e: Expr) -> bool:
    for x in _walk(e):
        if isinstance(x, (Func, Apply)):
            return False
        if isinstance(x, Pow) and (x.exp.denominator != 1 or x.exp < 0):
            return False
    return True


def _walk(e: Expr):
    stack = [e]
    while stack:
        x = stack.pop()
        yield x
        stack.extend(x.children())


def to_polynomial(e: Expr, variables: Sequence[str] = ()):
    """Rational normal form of a rational expression.

    Returns a Polynomial when the denominator is constant, else a
    ``(numerator, denominator)`` pair of Polynomials.  Generators are the
    given variables followed by any other symbols in order of appearance.
    Raises NonRationalError on transcendental or root content.
    """
    b = RationalBuilder(variables, strict=True)
    rf = b.convert(e)
    den = rf.denominator()
    if den.is_constant():
        return rf.num.scale(1 / den.constant_value())
    c = den.leading()[1]
    return rf.num.scale(1 / c), den.scale(1 / c)


def rational_expr(e: Expr) -> Expr:
    """Re-express e as expanded numerator / factored denominator (non-strict)."""
    b = RationalBuilder()
    rf = b.convert(e)
    inv = {name: atom for atom, name in b.atoms.items()}
    syms = {}
    for g in b.gens:
        if g in inv:
            syms[g] = inv[g]
        else:
            syms[g] = b.symbols.get(g, Var(g))
    num = rf.num.to_expr(syms)
    den = ONE
    for f, k in rf.den.values():
        den = mul(den, power(f.to_expr(syms), k))
    return mul(num, power(den, -1))
