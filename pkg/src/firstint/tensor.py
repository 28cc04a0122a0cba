"""Totally symmetric tensor fields and covariant differentiation.

Indices are 0-based here; text formats and reports use 1-based indices.
"""
from __future__ import annotations

from itertools import combinations_with_replacement, permutations
from math import comb, factorial
from typing import Callable, Mapping, Sequence

from .expr import ZERO, Const, Expr, add, diff, mul, simplify, to_expr
from fractions import Fraction


def multi_indices(dim: int, order: int) -> list[tuple[int, ...]]:
    """Sorted multi-indices i1 <= ... <= ir, in lexicographic order."""
    return list(combinations_with_replacement(range(dim), order))


class SymTensorField:
    """Order-r totally symmetric field stored on sorted multi-indices."""

    __slots__ = ("dim", "order", "_c")

    def __init__(self, dim: int, order: int, components: Mapping[Sequence[int], object] | None = None):
        if dim < 1 or order < 0:
            raise ValueError("dimension must be positive and order non-negative")
        self.dim = dim
        self.order = order
        c = {}
        for idx, v in (components or {}).items():
            idx = tuple(idx)
            self._check(idx)
            key = tuple(sorted(idx))
            if key in c and c[key] != to_expr(v):
                raise ValueError(f"conflicting values for component {key}")
            c[key] = to_expr(v)
        self._c = {k: v for k, v in c.items() if not v.is_zero}

    @classmethod
    def zero(cls, dim: int, order: int) -> "SymTensorField":
        return cls(dim, order)

    @classmethod
    def scalar(cls, dim: int, value) -> "SymTensorField":
        return cls(dim, 0, {(): value})

    @classmethod
    def from_function(cls, dim: int, order: int, fn: Callable[[tuple], Expr]) -> "SymTensorField":
        return cls(dim, order, {idx: fn(idx) for idx in multi_indices(dim, order)})

    def _check(self, idx: tuple) -> None:
        if len(idx) != self.order:
            raise IndexError(f"expected {self.order} indices, got {len(idx)}")
        for i in idx:
            if not 0 <= i < self.dim:
                raise IndexError(f"index {i} out of range for dimension {self.dim}")

    def __getitem__(self, idx) -> Expr:
        if not isinstance(idx, tuple):
            idx = (idx,)
        self._check(idx)
        return self._c.get(tuple(sorted(idx)), ZERO)

    get = __getitem__

    def items(self):
        """All C(D+r-1, r) stored components, zeros included."""
        for idx in multi_indices(self.dim, self.order):
            yield idx, self._c.get(idx, ZERO)

    def nonzero_items(self):
        return sorted(self._c.items())

    def n_components(self) -> int:
        return comb(self.dim + self.order - 1, self.order)

    def is_zero(self) -> bool:
        return not self._c

    def map(self, fn: Callable[[Expr], Expr]) -> "SymTensorField":
        return SymTensorField(self.dim, self.order, {k: fn(v) for k, v in self._c.items()})

    def __add__(self, other: "SymTensorField") -> "SymTensorField":
        self._compatible(other)
        keys = set(self._c) | set(other._c)
        return SymTensorField(self.dim, self.order, {k: add(self[k], other[k]) for k in keys})

    def __sub__(self, other: "SymTensorField") -> "SymTensorField":
        return self + other.scale(-1)

    def scale(self, c) -> "SymTensorField":
        c = to_expr(c)
        return self.map(lambda v: mul(c, v))

    def _compatible(self, other):
        if self.dim != other.dim or self.order != other.order:
            raise ValueError("tensor shapes differ")

    def __eq__(self, other):
        return (
            isinstance(other, SymTensorField)
            and self.dim == other.dim
            and self.order == other.order
            and self._c == other._c
        )

    def __hash__(self):
        return hash((self.dim, self.order, frozenset(self._c.items())))

    def __repr__(self):
        inner = ", ".join(f"{k}: {v}" for k, v in self.nonzero_items())
        return f"SymTensorField(dim={self.dim}, order={self.order}, {{{inner}}})"


def symmetrize(full: Callable[[tuple], Expr] | Mapping[tuple, Expr], dim: int, order: int) -> SymTensorField:
    """Normalized symmetrization: average of A over all index permutations."""
    get = full if callable(full) else (lambda idx: full.get(idx, ZERO))
    weight = Const(Fraction(1, factorial(order)))
    comps = {}
    for idx in multi_indices(dim, order):
        terms = [to_expr(get(p)) for p in permutations(idx)]
        comps[idx] = mul(weight, add(*terms))
    return SymTensorField(dim, order, comps)


def _check_dims(T: SymTensorField, conn) -> None:
    if T.dim != conn.dim:
        raise ValueError(f"tensor dimension {T.dim} differs from connection dimension {conn.dim}")


def cov_derivative(T: SymTensorField, conn) -> dict[tuple[tuple[int, ...], int], Expr]:
    """T_{i1..ir|c} keyed by (sorted multi-index, c)."""
    _check_dims(T, conn)
    coords = conn.coords
    out = {}
    for idx in multi_indices(T.dim, T.order):
        for c in range(T.dim):
            out[(idx, c)] = _cov_component(T, conn, idx, c, coords)
    return out


def _cov_component(T, conn, idx, c, coords) -> Expr:
    terms = [diff(T[idx], coords[c])]
    for s, i_s in enumerate(idx):
        for d in range(T.dim):
            g = conn.gamma(d, i_s, c)
            if g.is_zero:
                continue
            replaced = idx[:s] + (d,) + idx[s + 1:]
            t = T[replaced]
            if not t.is_zero:
                terms.append(mul(Const(-1), g, t))
    return add(*terms)


def sym_cov_derivative(T: SymTensorField, conn) -> SymTensorField:
    """T_{(i1..ir|i_{r+1})} with normalized weight; order r+1."""
    _check_dims(T, conn)
    coords = conn.coords
    r = T.order
    weight = Const(Fraction(1, r + 1))
    cache: dict = {}

    def cov(idx, c):
        key = (tuple(sorted(idx)), c)
        if key not in cache:
            cache[key] = _cov_component(T, conn, key[0], c, coords)
        return cache[key]

    comps = {}
    for J in multi_indices(T.dim, r + 1):
        terms = [cov(J[:p] + J[p + 1:], J[p]) for p in range(r + 1)]
        comps[J] = mul(weight, add(*terms))
    return SymTensorField(T.dim, r + 1, comps)


def contract(T: SymTensorField, Q: Sequence[Expr]) -> SymTensorField:
    """(T.Q)_{i1..i_{r-1}} = T_{i1..i_{r-1} d} Q^d."""
    if T.order == 0:
        raise ValueError("cannot contract a scalar")
    if len(Q) != T.dim:
        raise ValueError("force dimension differs from tensor dimension")
    comps = {}
    for J in multi_indices(T.dim, T.order - 1):
        comps[J] = add(*(mul(T[J + (d,)], to_expr(Q[d])) for d in range(T.dim)))
    return SymTensorField(T.dim, T.order - 1, comps)


def velocity_contract(T: SymTensorField, velocities: Sequence[Expr]) -> Expr:
    """T_{i1..ir} v^{i1} ... v^{ir} using multinomial weights on sorted indices."""
    if T.order == 0:
        return T[()]
    terms = []
    for idx, v in T.nonzero_items():
        counts = [idx.count(i) for i in range(T.dim)]
        w = factorial(T.order)
        for k in counts:
            w //= factorial(k)
        terms.append(mul(Const(w), v, *(velocities[i] for i in idx)))
    return add(*terms)


def gradient_field(f: Expr, coords: Sequence[str]) -> SymTensorField:
    return SymTensorField(len(coords), 1, {(i,): diff(f, c) for i, c in enumerate(coords)})


def simplify_field(T: SymTensorField) -> SymTensorField:
    return T.map(simplify)
