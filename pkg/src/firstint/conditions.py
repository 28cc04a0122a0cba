"""First-integral candidates, their condition chains, builders and the oracle.

A polynomial-in-time candidate of order m and time degree n carries tensors
L_(N) of every rank r = 1..m for N = 0..n, a scalar G(q) and constants s0
(and s1 for the odd complete forms).  An exponential candidate carries a
rate lambda and tensors L of ranks 1..m.  The checkers build one residual
field per condition and report a verdict per row.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import Mapping, Sequence

from .expr import (
    EXACT_ZERO, NON_ZERO, PROBABLY_ZERO, ZERO, Const, Expr, Var, add, diff, func, mul,
    neg, power, substitute, to_expr,
)
from .geometry import SystemDef
from .tensor import SymTensorField, contract, multi_indices, sym_cov_derivative, velocity_contract

TIME = "t"


# ---------------------------------------------------------------------------
# candidates
# ---------------------------------------------------------------------------

@dataclass
class PolyTimeCandidate:
    dim: int
    m: int
    n: int
    tensors: dict[tuple[int, int], SymTensorField] = field(default_factory=dict)
    G: Expr = ZERO
    s0: Expr = ZERO
    s1: Expr | None = None

    def __post_init__(self):
        if self.m < 1 or self.n < 0:
            raise ValueError("order must be >= 1 and time degree >= 0")
        self.G = to_expr(self.G)
        self.s0 = to_expr(self.s0)
        if self.s1 is not None:
            self.s1 = to_expr(self.s1)
        for (N, r), T in self.tensors.items():
            if not (0 <= N <= self.n and 1 <= r <= self.m):
                raise ValueError(f"tensor L_({N}) of rank {r} outside m={self.m}, n={self.n}")
            if T.order != r or T.dim != self.dim:
                raise ValueError(f"tensor L_({N}) rank {r} has wrong shape")

    def L(self, N: int, r: int) -> SymTensorField:
        """L_(N) of rank r; zero outside the stored range."""
        if r == 0:
            raise ValueError("rank-0 part is G")
        return self.tensors.get((N, r)) or SymTensorField.zero(self.dim, r)

    def has(self, N: int, r: int) -> bool:
        return (N, r) in self.tensors and not self.tensors[(N, r)].is_zero()

    def replace(self, **kw) -> "PolyTimeCandidate":
        d = dict(dim=self.dim, m=self.m, n=self.n, tensors=dict(self.tensors), G=self.G, s0=self.s0, s1=self.s1)
        d.update(kw)
        return PolyTimeCandidate(**d)


@dataclass
class ExpTimeCandidate:
    dim: int
    m: int
    lam: Expr
    tensors: dict[int, SymTensorField] = field(default_factory=dict)

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("order must be >= 1")
        self.lam = to_expr(self.lam)
        if self.lam.is_zero:
            raise ValueError("lambda must be nonzero")
        for r, T in self.tensors.items():
            if not 1 <= r <= self.m or T.order != r or T.dim != self.dim:
                raise ValueError(f"tensor of rank {r} has wrong shape")

    def L(self, r: int) -> SymTensorField:
        return self.tensors.get(r) or SymTensorField.zero(self.dim, r)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

@dataclass
class ConditionRow:
    id: str
    anchor: str
    verdict: str
    witness: dict | None = None

    @property
    def passed(self) -> bool:
        return self.verdict != NON_ZERO

    def to_dict(self) -> dict:
        return {"id": self.id, "anchor": self.anchor, "verdict": self.verdict, "witness": self.witness}


@dataclass
class ConditionReport:
    title: str
    rows: list[ConditionRow] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def failures(self) -> list[ConditionRow]:
        return [r for r in self.rows if not r.passed]

    def row(self, id: str) -> ConditionRow:
        for r in self.rows:
            if r.id == id:
                return r
        raise KeyError(id)

    def to_dict(self) -> dict:
        return {
            "schema": 1,
            "title": self.title,
            "verdict": "pass" if self.passed else "fail",
            "rows": [r.to_dict() for r in self.rows],
        }


def _label(idx: Sequence[int]) -> str:
    return ",".join(str(i + 1) for i in idx) if idx else "-"


def _round_point(p: dict) -> dict:
    return {k: float(f"{v:.12g}") for k, v in sorted(p.items())}


class _Checker:
    """Evaluates residual fields against one bound system."""

    def __init__(self, sys: SystemDef, seed: int = 0):
        self.params = dict(sys.params)
        self.sys = sys.bound()
        self.seed = seed
        self.Q = self.sys.forces
        self.conn = self.sys.connection
        self.coords = self.sys.coords

    def bind(self, e: Expr) -> Expr:
        return substitute(e, self.params) if self.params else e

    def row(self, id: str, anchor: str, components: Sequence[tuple[str, Expr]]) -> ConditionRow:
        kind = EXACT_ZERO
        for label, e in components:
            v = self.sys.zero_test(self.bind(e), seed=self.seed)
            if v.kind == NON_ZERO:
                witness = {"component": label, "point": _round_point(v.witness), "value": float(f"{v.value:.6g}")}
                return ConditionRow(id, anchor, NON_ZERO, witness)
            if v.kind == PROBABLY_ZERO:
                kind = PROBABLY_ZERO
        return ConditionRow(id, anchor, kind)

    # tensor helpers -----------------------------------------------------------
    def symcov(self, T: SymTensorField) -> SymTensorField:
        return sym_cov_derivative(T.map(self.bind), self.conn)

    def dotQ(self, T: SymTensorField) -> SymTensorField:
        return contract(T.map(self.bind), self.Q)

    def grad(self, f: Expr) -> SymTensorField:
        f = self.bind(f)
        return SymTensorField(self.sys.dim, 1, {(i,): diff(f, c) for i, c in enumerate(self.coords)})


def _components(T: SymTensorField) -> list[tuple[str, Expr]]:
    return [(_label(idx), v) for idx, v in T.items()]


def _lin(dim: int, order: int, *terms: tuple[object, SymTensorField]) -> SymTensorField:
    """sum of c * T for (c, T) pairs."""
    out = SymTensorField.zero(dim, order)
    for c, T in terms:
        out = out + T.scale(c)
    return out


# ---------------------------------------------------------------------------
# condition rows for polynomial-in-time candidates
# ---------------------------------------------------------------------------

@dataclass
class _RowSpec:
    id: str
    anchor: str
    parity: int           # (rank + N) parity of the tensors involved; 0 -> class 1
    build: object         # callable(checker) -> list of (label, Expr)


def _integral1_rows(c: PolyTimeCandidate, n: int | None = None, drop_lower_kt: bool = False) -> list[_RowSpec]:
    m = c.m
    n = c.n if n is None else n
    D = c.dim
    rows: list[_RowSpec] = []

    def kt(N):
        return lambda ch: _components(ch.symcov(c.L(N, m)))

    for N in range(n + 1):
        rows.append(_RowSpec(f"kt[N={N}]", f"L_({N}) rank {m} is a generalized KT: L_({N})(i1..i{m}|i{m + 1}) = 0",
                             (m + N) % 2, kt(N)))
    if n > 0 and m > 1:
        for k in range(1, n + 1):
            def rec(ch, k=k):
                return _components(_lin(D, m, (1, c.L(k, m)), (Fraction(1, k), ch.symcov(c.L(k - 1, m - 1)))))
            rows.append(_RowSpec(f"recursion[k={k}]",
                                 f"L_({k}) i1..i{m} = -(1/{k}) L_({k - 1})(i1..i{m - 1}|i{m})", (m + k) % 2, rec))
    if m > 1 and not drop_lower_kt:
        rows.append(_RowSpec("kt-lower", f"L_({n}) rank {m - 1} is a generalized KT",
                             (m - 1 + n) % 2, lambda ch: _components(ch.symcov(c.L(n, m - 1)))))

    def s0row(ch):
        return [("-", add(ch.dotQ(c.L(n, 1))[()], neg(c.s0)))]

    rows.append(_RowSpec("s0", f"L_({n})a Q^a = s0", (1 + n) % 2, s0row))

    def grow(ch):
        terms = [(1, ch.grad(c.G))]
        if m > 1:
            terms.append((-2, ch.dotQ(c.L(0, 2))))
        if n > 0:
            terms.append((1, c.L(1, 1)))
        return _components(_lin(D, 1, *terms))

    anchor = "G_,i = " + ("2 L_(0)ij Q^j" if m > 1 else "0") + (" - L_(1)i" if n > 0 else "")
    rows.append(_RowSpec("G-gradient", anchor, 0, grow))
    for k in range(1, n + 1):
        def chain(ch, k=k):
            terms = [(1, ch.grad(ch.dotQ(c.L(k - 1, 1))[()]))]
            if m > 1:
                terms.append((-2 * k, ch.dotQ(c.L(k, 2))))
            if k < n:
                terms.append((k * (k + 1), c.L(k + 1, 1)))
            return _components(_lin(D, 1, *terms))
        anchor = f"(L_({k - 1})c Q^c)_,i = " + (f"{2 * k} L_({k})ij Q^j" if m > 1 else "0") + \
            (f" - {k * (k + 1)} L_({k + 1})i" if k < n else "")
        rows.append(_RowSpec(f"chain[k={k}]", anchor, k % 2, chain))
    if m > 2:
        for k in range(n + 1):
            for r in range(2, m):
                def mixed(ch, k=k, r=r):
                    terms = [(1, ch.symcov(c.L(k, r - 1))), (-(r + 1), ch.dotQ(c.L(k, r + 1)))]
                    if k < n:
                        terms.append((k + 1, c.L(k + 1, r)))
                    return _components(_lin(D, r, *terms))
                anchor = f"L_({k})(i1..i{r - 1}|i{r}) = {r + 1} L_({k}) i1..i{r + 1} Q^i{r + 1}" + \
                    (f" - {k + 1} L_({k + 1}) i1..i{r}" if k < n else "")
                rows.append(_RowSpec(f"mixed[k={k},r={r}]", anchor, (r - 1 + k) % 2, mixed))
    return rows


def _run(title: str, specs: Sequence[_RowSpec], sys: SystemDef, seed: int) -> ConditionReport:
    ch = _Checker(sys, seed)
    return ConditionReport(title, [ch.row(s.id, s.anchor, s.build(ch)) for s in specs])


def check_integral1(c: PolyTimeCandidate, sys: SystemDef, seed: int = 0) -> ConditionReport:
    """Every polynomial-in-time condition for (m, n), guards applied structurally."""
    _check_dim(c.dim, sys)
    return _run(f"integral 1 (m={c.m}, n={c.n})", _integral1_rows(c), sys, seed)


def _check_dim(dim: int, sys: SystemDef):
    if dim != sys.dim:
        raise ValueError(f"candidate dimension {dim} differs from system dimension {sys.dim}")


# ---------------------------------------------------------------------------
# exponential candidates
# ---------------------------------------------------------------------------

def _numeric_lambda(c: ExpTimeCandidate, sys: SystemDef) -> Expr:
    lam = sys.bind(c.lam)
    if not isinstance(lam, Const):
        raise ValueError(f"lambda must bind to a number, got {lam}")
    if lam.value == 0:
        raise ValueError("lambda must be nonzero")
    return lam


def check_integral2(c: ExpTimeCandidate, sys: SystemDef, seed: int = 0) -> ConditionReport:
    _check_dim(c.dim, sys)
    lam = _numeric_lambda(c, sys)
    m, D = c.m, c.dim
    specs = [_RowSpec("kt", f"L rank {m} is a generalized KT", 0,
                      lambda ch: _components(ch.symcov(c.L(m))))]
    if m > 1:
        specs.append(_RowSpec(
            "lambda-recursion", f"L_i1..i{m} = -(1/lambda) L_(i1..i{m - 1}|i{m})", 0,
            lambda ch: _components(_lin(D, m, (1, c.L(m)), (power(lam, -1), ch.symcov(c.L(m - 1)))))))

    def grad(ch):
        terms = [(1, ch.grad(ch.dotQ(c.L(1))[()])), (mul(lam, lam), c.L(1))]
        if m > 1:
            terms.append((mul(Const(-2), lam), ch.dotQ(c.L(2))))
        return _components(_lin(D, 1, *terms))

    specs.append(_RowSpec("gradient", "(L_c Q^c)_,i = " + ("2 lambda L_ij Q^j - " if m > 1 else "- ") +
                          "lambda^2 L_i", 0, grad))
    if m > 2:
        for r in range(2, m):
            def mixed(ch, r=r):
                return _components(_lin(D, r, (1, ch.symcov(c.L(r - 1))), (-(r + 1), ch.dotQ(c.L(r + 1))),
                                        (lam, c.L(r))))
            specs.append(_RowSpec(f"mixed[r={r}]",
                                  f"L_(i1..i{r - 1}|i{r}) = {r + 1} L_i1..i{r + 1} Q^i{r + 1} - lambda L_i1..i{r}",
                                  0, mixed))
    return _run(f"integral 2 (m={m})", specs, sys, seed)


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------

def _velocities(sys_or_coords) -> list[Var]:
    coords = sys_or_coords.coords if hasattr(sys_or_coords, "coords") else sys_or_coords
    return [Var(c + "dot") for c in coords]


def build_integral1(c: PolyTimeCandidate, sys: SystemDef) -> Expr:
    """sum L_(N) t^N v..v + s0 t^(n+1)/(n+1) + sum_{N=1..n} L_(N-1)c Q^c t^N/N + G."""
    _check_dim(c.dim, sys)
    t = Var(TIME)
    v = _velocities(sys)
    terms = []
    for (N, r), T in sorted(c.tensors.items()):
        terms.append(mul(power(t, N), velocity_contract(T, v)))
    terms.append(mul(c.s0, power(t, c.n + 1), Const(Fraction(1, c.n + 1))))
    for N in range(1, c.n + 1):
        LQ = contract(c.L(N - 1, 1), sys.forces)[()]
        terms.append(mul(LQ, power(t, N), Const(Fraction(1, N))))
    terms.append(c.G)
    return add(*terms)


def build_integral2(c: ExpTimeCandidate, sys: SystemDef) -> Expr:
    """(e^(lambda t)/lambda) (lambda sum L v..v + L_c Q^c)."""
    _check_dim(c.dim, sys)
    lam = c.lam
    t = Var(TIME)
    v = _velocities(sys)
    inner = [mul(lam, velocity_contract(T, v)) for r, T in sorted(c.tensors.items())]
    inner.append(contract(c.L(1), sys.forces)[()])
    return mul(func("exp", mul(lam, t)), power(lam, -1), add(*inner))


# ---------------------------------------------------------------------------
# parity classes, absorption, complete forms
# ---------------------------------------------------------------------------

def parity_class(N: int, r: int) -> int:
    """1 when rank + N is even, else 2."""
    return 1 if (r + N) % 2 == 0 else 2


def s0_class(n: int) -> int:
    """The constant s0 pairs with L_(n) of rank 1."""
    return parity_class(n, 1)


def project_class(c: PolyTimeCandidate, cls: int) -> PolyTimeCandidate:
    tensors = {k: T for k, T in c.tensors.items() if parity_class(*k) == cls}
    return c.replace(
        tensors=tensors,
        G=c.G if cls == 1 else ZERO,
        s0=c.s0 if s0_class(c.n) == cls else ZERO,
        s1=c.s1 if c.s1 is not None and s0_class(c.n) == cls else None,
    )


def split_parity(c: PolyTimeCandidate) -> tuple[PolyTimeCandidate, PolyTimeCandidate]:
    """Split into the class with rank + N even (with G) and the class with rank + N odd."""
    if c.m <= 1:
        raise ValueError("parity split needs m > 1")
    return project_class(c, 1), project_class(c, 2)


def augmented_class(m: int) -> int:
    """The class that holds L_(2l) of rank m - 1 (2 for even m, 1 for odd m)."""
    return 2 if m % 2 == 0 else 1


def absorb_lower_order(c: PolyTimeCandidate, sys: SystemDef, seed: int = 0) -> PolyTimeCandidate:
    """Raise the time degree by one so that L_(n) of rank m-1 need not be a KT.

    The new tensors L_(n+1) of the ranks with the parity of m are read off
    the mixed conditions (the top rank from the recursion), the rank-1 one
    from the G or chain condition, and s0 becomes L_(n+1)a Q^a.  The input
    must satisfy every condition except the lower-order KT condition.
    """
    if c.m <= 1:
        raise ValueError("absorption needs m > 1")
    _check_dim(c.dim, sys)
    specs = [s for s in _integral1_rows(c) if s.id != "kt-lower"]
    report = _run("absorb precondition", specs, sys, seed)
    if not report.passed:
        bad = ", ".join(r.id for r in report.failures())
        raise ValueError(f"input fails its own conditions: {bad}")
    m, n, D = c.m, c.n, c.dim
    conn, Q = sys.connection, sys.forces
    tensors = dict(c.tensors)
    for r in range(m, 0, -1):
        if (r - m) % 2:
            continue
        if r >= 2:
            T = _lin(D, r, (r + 1, contract(c.L(n, r + 1), Q)) if r < m else (0, SymTensorField.zero(D, r)),
                     (-1, sym_cov_derivative(c.L(n, r - 1), conn)))
            T = T.scale(Fraction(1, n + 1))
        else:
            if n == 0:
                grad = SymTensorField(D, 1, {(i,): diff(c.G, x) for i, x in enumerate(sys.coords)})
                T = _lin(D, 1, (2, contract(c.L(0, 2), Q)), (-1, grad))
            else:
                LQ = contract(c.L(n - 1, 1), Q)[()]
                grad = SymTensorField(D, 1, {(i,): diff(LQ, x) for i, x in enumerate(sys.coords)})
                T = _lin(D, 1, (2 * n, contract(c.L(n, 2), Q)), (-1, grad)).scale(Fraction(1, n * (n + 1)))
        if not T.is_zero():
            tensors[(n + 1, r)] = T
    new_s0 = contract(tensors.get((n + 1, 1)) or SymTensorField.zero(D, 1), Q)[()]
    new_s0 = sys.bind(new_s0)
    out = PolyTimeCandidate(D, m, n + 1, tensors, c.G, new_s0, new_s0 if m % 2 else None)
    return out


COMPLETE_FORM_NAMES = {(0, 1): "J(2nu,1)", (0, 2): "J(2nu,2)", (1, 1): "J(2nu+1,1)", (1, 2): "J(2nu+1,2)"}


def check_complete_form(c: PolyTimeCandidate, parity: int, sys: SystemDef, seed: int = 0) -> ConditionReport:
    """Conditions of the complete form of class ``parity`` (1 or 2).

    The class-``parity`` part of the candidate is checked.  For the class
    that absorbed the lower-order symmetry n must be odd (n = 2l + 1),
    otherwise even (n = 2l).  Rows are the order-m conditions at degree n
    that involve this class; no lower-order KT condition appears.
    """
    if parity not in (1, 2):
        raise ValueError("parity must be 1 or 2")
    if c.m <= 1:
        raise ValueError("complete forms need m > 1")
    _check_dim(c.dim, sys)
    aug = augmented_class(c.m)
    want_odd = parity == aug
    if (c.n % 2 == 1) != want_odd:
        raise ValueError(
            f"class {parity} complete form of order {c.m} needs {'odd' if want_odd else 'even'} n, got n={c.n}")
    name = COMPLETE_FORM_NAMES[(c.m % 2, parity)]
    part = project_class(c, parity)
    if parity == 1 and c.m % 2 == 1 and c.s1 is not None and s0_class(c.n) == 1:
        part = part.replace(s0=c.s1)
    specs = [s for s in _integral1_rows(part) if s.parity == (parity - 1) and s.id != "kt-lower"]
    for s in specs:
        if s.id == "s0" and c.m % 2 == 1 and parity == 1:
            s.id, s.anchor = "s1", s.anchor.replace("s0", "s1")
    ell = c.n // 2
    return _run(f"{name} complete form (m={c.m}, l={ell})", [
        _RowSpec(f"{name}/{s.id}", s.anchor, s.parity, s.build) for s in specs], sys, seed)


# ---------------------------------------------------------------------------
# the generic PDE system and the total-derivative oracle
# ---------------------------------------------------------------------------

def check_fi_pde_system(M: Mapping[int, SymTensorField | Expr], sys: SystemDef, seed: int = 0) -> ConditionReport:
    """Residuals of the FI condition for time-dependent coefficients M_r(t, q), r = 0..m."""
    ranks = sorted(M)
    if not ranks or ranks != list(range(len(ranks))):
        raise ValueError(f"coefficient ranks must be 0..m without gaps, got {ranks}")
    m = ranks[-1]
    if m < 1:
        raise ValueError("need at least a rank-1 coefficient")
    D = sys.dim
    fields = {}
    for r, T in M.items():
        if not isinstance(T, SymTensorField):
            T = SymTensorField.scalar(D, T) if r == 0 else None
        if T is None or T.order != r or T.dim != D:
            raise ValueError(f"coefficient of rank {r} has wrong shape")
        fields[r] = T

    def dt(T):
        return T.map(lambda e: diff(e, TIME))

    specs = [_RowSpec("kt", f"M_(i1..i{m}|i{m + 1}) = 0", 0, lambda ch: _components(ch.symcov(fields[m])))]
    specs.append(_RowSpec("top", f"M_i1..i{m},t + M_(i1..i{m - 1}|i{m}) = 0", 0,
                          lambda ch: _components(_lin(D, m, (1, dt(fields[m])),
                                                      (1, _symcov_or_zero(ch, fields, m - 1))))))
    for r in range(1, m):
        def mixed(ch, r=r):
            return _components(_lin(D, r, (1, dt(fields[r])), (1, _symcov_or_zero(ch, fields, r - 1)),
                                    (-(r + 1), ch.dotQ(fields[r + 1]))))
        specs.append(_RowSpec(f"mixed[r={r}]",
                              f"M_i1..i{r},t + M_(i1..i{r - 1}|i{r}) - {r + 1} M_i1..i{r + 1} Q^i{r + 1} = 0", 0, mixed))
    specs.append(_RowSpec("scalar", "M_,t - M_i Q^i = 0", 0,
                          lambda ch: [("-", add(diff(fields[0][()], TIME), neg(ch.dotQ(fields[1])[()])))]))
    return _run(f"FI PDE system (m={m})", specs, sys, seed)


def _symcov_or_zero(ch, fields, r):
    if r < 0:
        return SymTensorField.zero(ch.sys.dim, 0)
    return ch.symcov(fields[r])


def total_derivative(I: Expr, sys: SystemDef) -> Expr:
    """dI/dt along the equations of motion, as an expression in (t, q, v)."""
    v = _velocities(sys)
    D = sys.dim
    terms = [diff(I, TIME)]
    for a, c in enumerate(sys.coords):
        terms.append(mul(diff(I, c), v[a]))
    for a in range(D):
        dIv = diff(I, v[a].name)
        if dIv.is_zero:
            continue
        acc = [neg(sys.forces[a])]
        for b in range(D):
            for cc in range(D):
                g = sys.connection.gamma(a, b, cc)
                if not g.is_zero:
                    acc.append(neg(mul(g, v[b], v[cc])))
        terms.append(mul(dIv, add(*acc)))
    return add(*terms)


@dataclass
class OracleResult:
    residual: Expr
    verdict: str
    witness: dict | None = None
    value: float | None = None

    @property
    def conserved(self) -> bool:
        return self.verdict != NON_ZERO


def total_derivative_oracle(I: Expr, sys: SystemDef, seed: int = 0) -> OracleResult:
    """Zero test of dI/dt over the phase box (velocities in [-1, 1], t in [0, 1])."""
    b = sys.bound()
    I = sys.bind(I)
    R = total_derivative(I, b)
    v = b.zero_test(R, seed=seed)
    return OracleResult(R, v.kind, v.witness, v.value)


# ---------------------------------------------------------------------------
# recovering tensor coefficients from an assembled expression
# ---------------------------------------------------------------------------

def velocity_coefficients(e: Expr, sys_or_coords, max_order: int) -> dict[int, SymTensorField]:
    """Taylor coefficients in the velocities at v = 0: rank r -> T with e = sum T v..v."""
    coords = sys_or_coords.coords if hasattr(sys_or_coords, "coords") else tuple(sys_or_coords)
    v = [x.name for x in _velocities(coords)]
    D = len(coords)
    at_zero = {name: 0 for name in v}
    out = {}
    for r in range(max_order + 1):
        comps = {}
        for idx in multi_indices(D, r):
            d = e
            for i in idx:
                d = diff(d, v[i])
            # T_idx = (1/r!) d^r e / dv^idx; contraction weights restore e
            comps[idx] = mul(Const(Fraction(1, factorial(r))), substitute(d, at_zero))
        out[r] = SymTensorField(D, r, comps)
    return out


def exp_candidate_from_expression(I: Expr, lam, sys: SystemDef, m: int) -> tuple[ExpTimeCandidate, Expr]:
    """Read an exponential candidate off e^(lambda t) P(q, v).

    Returns the candidate and the residual of its scalar part,
    P_0 - L_c Q^c / lambda, which must vanish for I to have the form.
    """
    lam = to_expr(lam)
    t = Var(TIME)
    P = mul(I, func("exp", neg(mul(lam, t))))
    coeffs = velocity_coefficients(P, sys, m)
    for r, T in coeffs.items():
        for idx, comp in T.items():
            if diff(comp, TIME) != ZERO and not sys.zero_test(diff(comp, TIME)).is_zero:
                raise ValueError("expression is not of the form exp(lambda t) P(q, v)")
    tensors = {r: T for r, T in coeffs.items() if r >= 1 and not T.is_zero()}
    cand = ExpTimeCandidate(sys.dim, m, lam, tensors)
    scalar = add(coeffs[0][()], neg(mul(contract(cand.L(1), sys.forces)[()], power(lam, -1))))
    return cand, scalar
