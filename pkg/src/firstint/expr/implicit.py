"""Scalar functions defined implicitly by a polynomial relation Phi(x, F) = 0."""
from __future__ import annotations

from functools import lru_cache
from typing import Callable

import numpy as np

from .core import Apply, Expr, Var, mul, neg, power, substitute
from .diff import diff
from .evaluate import compile_exprs
from .poly import to_polynomial
from .printing import to_string


class NoRealRootError(ArithmeticError):
    pass


class BranchCollisionError(ArithmeticError):
    pass


NEWTON_TOL = 1e-13
COLLISION_TOL = 1e-7


class ImplicitFunction:
    """F(x) with Phi(x, F(x)) = 0 on a branch chosen nearest to a seed.

    ``relation`` is an expression in the variables ``arg`` and ``value``
    whose parameters are already bound; it must be polynomial in ``value``.
    ``seed`` is an expression in ``arg``.  Called statelessly, the root
    nearest the seed is returned; ``tracker()`` gives a stateful evaluator
    that follows one branch by nearest-root continuation.
    """

    arity = 1

    def __init__(self, name: str, arg: str, value: str, relation: Expr, seed: Expr):
        self.name = name
        self.arg = arg
        self.value = value
        self.relation = relation
        self.seed = seed
        p = to_polynomial(relation, [arg, value])
        if isinstance(p, tuple):
            raise ValueError("relation must be polynomial")
        self._coeffs = self._coefficients(p)
        self._phi, self._phi_x, self._phi_f = _compiled(self)
        self._seed = compile_exprs([seed], [arg])

    def _coefficients(self, p):
        ix = p.gens.index(self.arg)
        jf = p.gens.index(self.value)
        deg = p.degree(self.value)
        coeffs: list[list[tuple[int, float]]] = [[] for _ in range(deg + 1)]
        for m, c in p.terms.items():
            if any(k for i, k in enumerate(m) if i not in (ix, jf)):
                raise ValueError("relation has unbound symbols")
            coeffs[deg - m[jf]].append((m[ix], float(c)))
        return coeffs

    # -- numerics ---------------------------------------------------------------
    def roots(self, x: float) -> np.ndarray:
        """Real roots in F at the given x, sorted."""
        c = [sum(v * x**k for k, v in terms) for terms in self._coeffs]
        while c and c[0] == 0:
            c.pop(0)
        if len(c) <= 1:
            return np.array([])
        r = np.roots(c)
        scale = max(1.0, float(np.max(np.abs(r))))
        real = sorted(float(z.real) for z in r if abs(z.imag) <= 1e-7 * scale)
        return np.array([self._newton(x, f) for f in real])

    def _newton(self, x: float, f: float) -> float:
        for _ in range(50):
            d = self._phi_f(x, f)[0]
            if d == 0:
                break
            step = self._phi(x, f)[0] / d
            f -= step
            if abs(step) <= NEWTON_TOL * (1 + abs(f)):
                break
        return f

    def solve(self, x: float, guess: float) -> float:
        roots = self.roots(x)
        if roots.size == 0:
            raise NoRealRootError(f"{self.name}: no real root of {to_string(self.relation)} at {self.arg}={x}")
        i = int(np.argmin(np.abs(roots - guess)))
        f = float(roots[i])
        others = np.delete(roots, i)
        if others.size and np.min(np.abs(others - f)) <= COLLISION_TOL * (1 + abs(f)):
            raise BranchCollisionError(
                f"{self.name}: roots collide near {self.value}={f:.6g} at {self.arg}={x:.6g}; "
                f"real roots {np.array2string(roots, precision=6)}"
            )
        return f

    def evaluate(self, args) -> float:
        x = float(args[0])
        return self.solve(x, self._seed(x)[0])

    def tracker(self, x0: float | None = None) -> "BranchTracker":
        return BranchTracker(self, x0)

    # -- symbolic -----------------------------------------------------------------
    def partial(self, i: int, args) -> Expr:
        if i != 0:
            raise IndexError(i)
        d = _derivative_expr(self)
        return substitute(d, {self.arg: args[0]})

    def __call__(self, arg: Expr) -> Expr:
        return Apply(self, [arg])


@lru_cache(maxsize=None)
def _derivative_expr_cached(fn: ImplicitFunction) -> Expr:
    x = Var(fn.arg)
    at = {fn.value: Apply(fn, [x])}
    px = substitute(diff(fn.relation, fn.arg), at)
    pf = substitute(diff(fn.relation, fn.value), at)
    return neg(mul(px, power(pf, -1)))


def _derivative_expr(fn: ImplicitFunction) -> Expr:
    return _derivative_expr_cached(fn)


def _compiled(fn: ImplicitFunction) -> tuple[Callable, Callable, Callable]:
    args = [fn.arg, fn.value]
    return (
        compile_exprs([fn.relation], args),
        compile_exprs([diff(fn.relation, fn.arg)], args),
        compile_exprs([diff(fn.relation, fn.value)], args),
    )


class BranchTracker:
    """Caller-owned branch state: each call returns the root nearest the last one.

    A fold, where the tracked root meets a neighbour and both turn complex,
    shows up as a jump larger than the last distance to that neighbour;
    the tracker then raises instead of switching branches.
    """

    def __init__(self, fn: ImplicitFunction, x0: float | None = None):
        self.fn = fn
        self.last: float | None = None
        self.last_x: float | None = None
        self.gap = np.inf
        if x0 is not None:
            self([x0])

    def __call__(self, args) -> float:
        x = float(args[0])
        guess = self.fn._seed(x)[0] if self.last is None else self.last
        f = self.fn.solve(x, guess)
        roots = self.fn.roots(x)
        others = np.abs(roots - f)
        others = others[others > COLLISION_TOL * (1 + abs(f))]
        if self.last is not None and abs(f - self.last) > self.gap:
            raise BranchCollisionError(
                f"{self.fn.name}: tracked branch lost between {self.fn.arg}={self.last_x:.9g} and {x:.9g} "
                f"(fold near {self.fn.value}={self.last:.6g}, jump to {f:.6g})"
            )
        self.last, self.last_x = f, x
        self.gap = float(others.min()) if others.size else np.inf
        return f

    evaluate = __call__
