"""Polynomial-ansatz search for generalized Killing vectors and tensors.

The ansatz coefficients enter the Killing condition linearly.  With the
connection written over a common denominator D (Gamma = P / D), the
condition becomes polynomial after multiplying by D, and its monomial
coefficients form an exact sparse linear system.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Sequence

from .expr import Const, Var, add, mul, power
from .expr.poly import NonRationalError, Polynomial, RationalBuilder
from .linalg import exact_rank, float_rank, nullspace
from .tensor import SymTensorField, multi_indices, sym_cov_derivative

DEGREE_CAP = 6
COEFFICIENT_CAP = 20000


class SizeCapExceeded(ValueError):
    pass


@dataclass(frozen=True)
class AnsatzSpec:
    order: int
    degree: int
    coords: tuple[str, ...]

    def __post_init__(self):
        if self.order < 1 or self.degree < 0:
            raise ValueError("order must be >= 1 and degree >= 0")

    @property
    def n_unknowns(self) -> int:
        D = len(self.coords)
        return comb(D + self.order - 1, self.order) * comb(D + self.degree, self.degree)


@dataclass
class LinearSystem:
    rows: list[dict[int, Fraction]]
    columns: list[tuple]
    row_labels: list[tuple]

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.rows), len(self.columns)

    def nullspace(self) -> list[list[int]]:
        return nullspace(self.rows, len(self.columns))

    def exact_rank(self) -> int:
        return exact_rank(self.rows, len(self.columns))

    def float_rank(self, tol: float = 1e-8) -> int:
        return float_rank(self.rows, len(self.columns), tol)


# ---------------------------------------------------------------------------
# polynomials linear in the unknowns: {monomial: {column: coefficient}}
# ---------------------------------------------------------------------------

def _lin_add(a: dict, b: dict, scale: Fraction = Fraction(1)) -> dict:
    out = {m: dict(cs) for m, cs in a.items()}
    for m, cs in b.items():
        row = out.setdefault(m, {})
        for c, v in cs.items():
            nv = row.get(c, 0) + scale * v
            if nv:
                row[c] = nv
            else:
                row.pop(c, None)
        if not row:
            del out[m]
    return out


def _lin_mul_poly(a: dict, p: Polynomial) -> dict:
    out: dict = {}
    for m1, cs in a.items():
        for m2, v in p.terms.items():
            m = tuple(x + y for x, y in zip(m1, m2))
            row = out.setdefault(m, {})
            for c, w in cs.items():
                nv = row.get(c, 0) + v * w
                if nv:
                    row[c] = nv
                else:
                    row.pop(c, None)
    return {m: r for m, r in out.items() if r}


def _lin_diff(a: dict, i: int) -> dict:
    out = {}
    for m, cs in a.items():
        if m[i]:
            mm = list(m)
            mm[i] -= 1
            out[tuple(mm)] = {c: v * m[i] for c, v in cs.items()}
    return out


def _monomials(nvars: int, degree: int) -> list[tuple[int, ...]]:
    out = []

    def rec(prefix, left, k):
        if k == nvars:
            out.append(tuple(prefix))
            return
        for e in range(left + 1):
            rec(prefix + [e], left - e, k + 1)

    rec([], degree, 0)
    out.sort(key=lambda m: (sum(m), tuple(-x for x in m)))
    return out


# ---------------------------------------------------------------------------
# connection over a common denominator
# ---------------------------------------------------------------------------

class PolynomialConnection:
    """Gamma^a_bc = P^a_bc / D with polynomial P and D."""

    def __init__(self, conn):
        coords = list(conn.coords)
        b = RationalBuilder(coords, strict=True)
        try:
            for _, v in conn.items():
                b.collect(v)
        except NonRationalError as exc:
            raise NonRationalError(exc.node) from None
        if len(b.gens) != len(coords):
            extra = sorted(set(b.gens) - set(coords))
            raise ValueError(f"connection has unbound symbols {extra}; bind parameters first")
        forms = {k: b.convert(v) for k, v in conn.items()}
        lcm: dict = {}
        for rf in forms.values():
            for key, (f, k) in rf.den.items():
                if lcm.get(key, (f, 0))[1] < k:
                    lcm[key] = (f, k)
        one = Polynomial.const(coords, 1)
        D = one
        for f, k in lcm.values():
            D = D * f**k
        P = {}
        for key, rf in forms.items():
            cof = one
            for fk, (f, k) in lcm.items():
                cof = cof * f ** (k - rf.den.get(fk, (f, 0))[1])
            P[key] = rf.num * cof
        self.coords = tuple(coords)
        self.dim = len(coords)
        self.D = D
        self.dD = [D.derivative(c) for c in coords]
        self._P = P

    def P(self, a: int, b: int, c: int) -> Polynomial | None:
        return self._P.get((a, min(b, c), max(b, c)))


def _symcov_numerator(N: dict, pc: PolynomialConnection, order: int, k: int) -> dict:
    """Numerator of the symmetrized covariant derivative of N / D^k.

    Returns components (order + 1) of D^(k+1) * (r+1) * T_(I|c) as
    linear polynomials, i.e. sum over positions of
    D dN - k N dD - sum_s P N.
    """
    dim = pc.dim
    cache: dict = {}

    def cov(idx, c):
        key = (idx, c)
        if key in cache:
            return cache[key]
        Nidx = N.get(idx, {})
        out = _lin_mul_poly(_lin_diff(Nidx, c), pc.D)
        if k:
            out = _lin_add(out, _lin_mul_poly(Nidx, pc.dD[c]), Fraction(-k))
        for s, i_s in enumerate(idx):
            for d in range(dim):
                P = pc.P(d, i_s, c)
                if P is None:
                    continue
                rep = tuple(sorted(idx[:s] + (d,) + idx[s + 1:]))
                if rep in N:
                    out = _lin_add(out, _lin_mul_poly(N[rep], P), Fraction(-1))
        cache[key] = out
        return out

    res = {}
    for J in multi_indices(dim, order + 1):
        acc: dict = {}
        for p in range(order + 1):
            acc = _lin_add(acc, cov(J[:p] + J[p + 1:], J[p]))
        res[J] = acc
    return res


def _ansatz(dim: int, order: int, degree: int):
    monos = _monomials(dim, degree)
    columns = []
    N = {}
    for I in multi_indices(dim, order):
        comp = {}
        for mono in monos:
            comp[mono] = {len(columns): Fraction(1)}
            columns.append((I, mono))
        N[I] = comp
    return N, columns


def _system_from(res: dict, columns) -> LinearSystem:
    rows, labels = [], []
    for J in sorted(res):
        for mono in sorted(res[J]):
            row = res[J][mono]
            if row:
                rows.append(row)
                labels.append((J, mono))
    return LinearSystem(rows, columns, labels)


def _check_caps(spec: AnsatzSpec, degree_cap: int, coefficient_cap: int):
    if spec.degree > degree_cap:
        raise SizeCapExceeded(f"degree {spec.degree} exceeds cap {degree_cap}")
    if spec.n_unknowns > coefficient_cap:
        raise SizeCapExceeded(f"{spec.n_unknowns} coefficients exceed cap {coefficient_cap}")


def kt_system(conn, spec: AnsatzSpec, degree_cap=DEGREE_CAP, coefficient_cap=COEFFICIENT_CAP) -> LinearSystem:
    """Linear system of the generalized Killing condition for the ansatz."""
    _check_caps(spec, degree_cap, coefficient_cap)
    pc = PolynomialConnection(conn)
    N, columns = _ansatz(pc.dim, spec.order, spec.degree)
    return _system_from(_symcov_numerator(N, pc, spec.order, 0), columns)


def _to_field(vec: Sequence[int], columns, dim: int, order: int, coords) -> SymTensorField:
    xs = [Var(c) for c in coords]
    comps: dict = {}
    for v, (I, mono) in zip(vec, columns):
        if v:
            term = mul(Const(v), *(power(x, e) for x, e in zip(xs, mono) if e))
            comps.setdefault(I, []).append(term)
    return SymTensorField(dim, order, {I: add(*ts) for I, ts in comps.items()})


def find_generalized_kts(conn, spec: AnsatzSpec | int, degree: int | None = None,
                         degree_cap=DEGREE_CAP, coefficient_cap=COEFFICIENT_CAP,
                         verify: bool = True) -> list[SymTensorField]:
    """Basis of polynomial generalized Killing tensors of the given order and degree.

    Accepts either an AnsatzSpec or (order, degree).  Every basis element
    has an exactly vanishing symmetrized covariant derivative.
    """
    if not isinstance(spec, AnsatzSpec):
        spec = AnsatzSpec(int(spec), int(degree), tuple(conn.coords))
    system = kt_system(conn, spec, degree_cap, coefficient_cap)
    basis = [_to_field(v, system.columns, conn.dim, spec.order, conn.coords) for v in system.nullspace()]
    if verify:
        _verify(basis, conn)
    return basis


def _verify(basis, conn):
    from .expr import exact_zero

    for T in basis:
        for idx, r in sym_cov_derivative(T, conn).items():
            if not exact_zero(r, budget=None):
                raise AssertionError(f"basis tensor {T} fails the Killing condition at {idx}")


@dataclass
class ReducibleGenerator:
    vector: SymTensorField
    tensor: SymTensorField


def reducible_system(conn, degree: int, degree_cap=DEGREE_CAP, coefficient_cap=COEFFICIENT_CAP) -> LinearSystem:
    spec = AnsatzSpec(1, degree, tuple(conn.coords))
    _check_caps(spec, degree_cap, coefficient_cap)
    pc = PolynomialConnection(conn)
    N, columns = _ansatz(pc.dim, 1, degree)
    K = _symcov_numerator(N, pc, 1, 0)       # D * 2 * B_(a|b)
    return _system_from(_symcov_numerator(K, pc, 2, 1), columns)


def find_reducible_kt_generators(conn, degree: int, degree_cap=DEGREE_CAP,
                                 coefficient_cap=COEFFICIENT_CAP) -> list[ReducibleGenerator]:
    """Vectors B with B_(a|b) a generalized KT, modulo generalized KVs."""
    system = reducible_system(conn, degree, degree_cap, coefficient_cap)
    kv = kt_system(conn, AnsatzSpec(1, degree, tuple(conn.coords)), degree_cap, coefficient_cap)
    kvs = kv.nullspace()
    span = [{i: Fraction(x) for i, x in enumerate(v) if x} for v in kvs]
    rank = len(span)
    out = []
    for v in system.nullspace():
        trial = span + [{i: Fraction(x) for i, x in enumerate(v) if x}]
        r = exact_rank(trial, len(system.columns))
        if r > rank:
            span, rank = trial, r
            B = _to_field(v, system.columns, conn.dim, 1, conn.coords)
            out.append(ReducibleGenerator(B, sym_cov_derivative(B, conn)))
    return out
