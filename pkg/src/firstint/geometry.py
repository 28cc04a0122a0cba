"""Connections, system definitions, curvature, metricity and 2d classification."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Mapping, Sequence

from scipy import integrate

from .expr import (
    NON_ZERO, ONE, ZERO, Apply, Const, Expr, Param, Var, ZeroVerdict, add, diff, evaluate,
    free_symbols, func, is_identically_zero, mul, neg, power, substitute, to_expr,
)
from .expr.poly import RationalBuilder
from .linalg import solve
from .tensor import SymTensorField, cov_derivative

VELOCITY_BOX = (-1.0, 1.0)
TIME_BOX = (0.0, 1.0)


def velocity_name(coord: str) -> str:
    return coord + "dot"


class Connection:
    """Symmetric connection Gamma^a_bc, stored for b <= c (0-based)."""

    def __init__(self, coords: Sequence[str], components: Mapping[tuple[int, int, int], object] | None = None):
        self.coords = tuple(coords)
        self.dim = len(self.coords)
        comps = {}
        for (a, b, c), v in (components or {}).items():
            for i in (a, b, c):
                if not 0 <= i < self.dim:
                    raise IndexError(f"connection index {i} out of range")
            key = (a, min(b, c), max(b, c))
            v = to_expr(v)
            if key in comps and comps[key] != v:
                raise ValueError(f"conflicting connection component {key}")
            if not v.is_zero:
                comps[key] = v
        self._c = comps

    @classmethod
    def flat(cls, coords: Sequence[str]) -> "Connection":
        return cls(coords)

    def gamma(self, a: int, b: int, c: int) -> Expr:
        return self._c.get((a, min(b, c), max(b, c)), ZERO)

    def items(self):
        return sorted(self._c.items())

    def map(self, fn) -> "Connection":
        return Connection(self.coords, {k: fn(v) for k, v in self._c.items()})

    def is_flat(self) -> bool:
        return not self._c

    def __eq__(self, other):
        return isinstance(other, Connection) and self.coords == other.coords and self._c == other._c

    def __repr__(self):
        return f"Connection({self.coords}, {{{', '.join(f'{k}: {v}' for k, v in self.items())}}})"


@dataclass
class SystemDef:
    """Dynamical system q'' = -Gamma q' q' - Q with its sampling domain.

    Expressions keep parameters symbolic; ``params`` holds their values and
    ``bound()`` substitutes them.
    """

    name: str
    connection: Connection
    forces: list[Expr]
    params: dict[str, Fraction | float] = field(default_factory=dict)
    domain: dict[str, tuple[float, float]] = field(default_factory=dict)
    singular: list[Expr] = field(default_factory=list)
    functions: dict[str, object] = field(default_factory=dict)
    description: str = ""

    def __post_init__(self):
        self.forces = [to_expr(f) for f in self.forces]
        if len(self.forces) != self.connection.dim:
            raise ValueError("force count differs from dimension")
        for c in self.coords:
            self.domain.setdefault(c, (-1.0, 1.0))

    @property
    def coords(self) -> tuple[str, ...]:
        return self.connection.coords

    @property
    def dim(self) -> int:
        return self.connection.dim

    @property
    def velocities(self) -> tuple[str, ...]:
        return tuple(velocity_name(c) for c in self.coords)

    def bind(self, e: Expr) -> Expr:
        return substitute(e, self.params) if self.params else e

    def bound(self) -> "SystemDef":
        if not self.params:
            return self
        return SystemDef(
            name=self.name,
            connection=self.connection.map(self.bind),
            forces=[self.bind(f) for f in self.forces],
            params={},
            domain=dict(self.domain),
            singular=[self.bind(s) for s in self.singular],
            functions=dict(self.functions),
            description=self.description,
        )

    def with_params(self, **values) -> "SystemDef":
        p = dict(self.params)
        p.update(values)
        return replace(self, params=p)

    def phase_box(self, velocities: bool = True, time: bool = False) -> dict[str, tuple[float, float]]:
        box = {c: tuple(self.domain[c]) for c in self.coords}
        if velocities:
            for v in self.velocities:
                box[v] = VELOCITY_BOX
        if time:
            box["t"] = TIME_BOX
        return box

    def zero_test(self, e: Expr, seed: int = 0, exact: bool = True) -> ZeroVerdict:
        """Zero test of an expression over the phase box (parameters bound)."""
        e = self.bind(e)
        names = free_symbols(e)
        box = self.phase_box(velocities=True, time=True)
        extra = names - set(box)
        if extra:
            raise ValueError(f"unbound symbols {sorted(extra)} in {e}")
        box = {k: v for k, v in box.items() if k in names or k in self.coords}
        singular = [self.bind(s) for s in self.singular]
        return is_identically_zero(e, box, singular=singular, seed=seed, exact=exact)


# ---------------------------------------------------------------------------
# curvature and metricity
# ---------------------------------------------------------------------------

@dataclass
class CurvatureField:
    dim: int
    components: dict[tuple[int, int, int, int], Expr]

    def __getitem__(self, idx) -> Expr:
        return self.components[tuple(idx)]

    def nonzero_items(self):
        return [(k, v) for k, v in sorted(self.components.items()) if not v.is_zero]

    def antisymmetry_residuals(self) -> dict:
        out = {}
        for (a, b, c, d), v in self.components.items():
            if c < d:
                out[(a, b, c, d)] = add(v, self.components[(a, b, d, c)])
        return out


def curvature(conn: Connection) -> CurvatureField:
    """R^a_bcd = G^a_bd,c - G^a_bc,d + G^a_sc G^s_bd - G^a_sd G^s_bc."""
    D = conn.dim
    x = conn.coords
    comps = {}
    for a in range(D):
        for b in range(D):
            for c in range(D):
                for d in range(D):
                    terms = [diff(conn.gamma(a, b, d), x[c]), neg(diff(conn.gamma(a, b, c), x[d]))]
                    for s in range(D):
                        terms.append(mul(conn.gamma(a, s, c), conn.gamma(s, b, d)))
                        terms.append(neg(mul(conn.gamma(a, s, d), conn.gamma(s, b, c))))
                    comps[(a, b, c, d)] = add(*terms)
    return CurvatureField(D, comps)


@dataclass
class MetricField:
    tensor: SymTensorField
    det: Expr

    @classmethod
    def from_tensor(cls, g: SymTensorField) -> "MetricField":
        return cls(g, determinant(g))


def determinant(g: SymTensorField) -> Expr:
    n = g.dim
    if n == 1:
        return g[(0, 0)]
    if n == 2:
        return add(mul(g[(0, 0)], g[(1, 1)]), neg(mul(g[(0, 1)], g[(0, 1)])))
    # general case via Laplace expansion on full matrices
    M = [[g[(i, j)] for j in range(n)] for i in range(n)]
    return _laplace(M)


def _laplace(M) -> Expr:
    n = len(M)
    if n == 1:
        return M[0][0]
    terms = []
    for j in range(n):
        if M[0][j].is_zero:
            continue
        minor = [row[:j] + row[j + 1:] for row in M[1:]]
        t = mul(M[0][j], _laplace(minor))
        terms.append(t if j % 2 == 0 else neg(t))
    return add(*terms)


def metricity_residual(conn: Connection, metric: SymTensorField | MetricField) -> dict:
    """gamma_{ab|c} keyed by ((a, b), c) with a <= b."""
    g = metric.tensor if isinstance(metric, MetricField) else metric
    if g.order != 2:
        raise ValueError("metric must be of order 2")
    return cov_derivative(g, conn)


# ---------------------------------------------------------------------------
# 2d classification
# ---------------------------------------------------------------------------

@dataclass
class Classification:
    kind: str  # "Riemannian" | "NonRiemannian" | "Indeterminate"
    case: int | None = None
    metric: MetricField | None = None
    potential: Expr | None = None
    witness: dict | None = None
    criterion: ZeroVerdict | None = None
    metricity: dict | None = None
    diagnostics: str = ""

    def summary(self) -> dict:
        out = {"kind": self.kind}
        if self.case is not None:
            out["case"] = self.case
        if self.metric is not None:
            out["metric"] = {
                ",".join(str(i + 1) for i in k): str(v) for k, v in self.metric.tensor.nonzero_items()
            }
            out["det"] = str(self.metric.det)
        if self.witness is not None:
            out["witness"] = {k: float(v) for k, v in self.witness.items()}
        if self.metricity is not None:
            out["metricity"] = self.metricity
        if self.diagnostics:
            out["diagnostics"] = self.diagnostics
        return out


class PathPotential:
    """phi(x, y) with phi_x = f1, phi_y = f2, evaluated by quadrature.

    The value integrates f1 along y = y0 from x0, then f2 along the vertical
    segment; its partial derivatives are f1 and f2 exactly (integrability
    is checked by the caller).
    """

    arity = 2

    def __init__(self, name: str, coords: Sequence[str], f1: Expr, f2: Expr, base: Sequence[float]):
        from .expr import compile_expr

        self.name = name
        self.coords = tuple(coords)
        self.f1, self.f2 = f1, f2
        self.base = tuple(float(b) for b in base)
        self._f1 = compile_expr(f1, self.coords)
        self._f2 = compile_expr(f2, self.coords)

    def evaluate(self, args) -> float:
        x, y = float(args[0]), float(args[1])
        x0, y0 = self.base
        a, err_a = integrate.quad(lambda s: self._f1(s, y0), x0, x, epsabs=1e-13, epsrel=1e-12, limit=200)
        b, err_b = integrate.quad(lambda s: self._f2(x, s), y0, y, epsabs=1e-13, epsrel=1e-12, limit=200)
        if not (math.isfinite(a) and math.isfinite(b)) or err_a + err_b > 1e-8 * (1 + abs(a) + abs(b)):
            raise ArithmeticError(f"quadrature failed for {self.name} at ({x}, {y})")
        return a + b

    def partial(self, i: int, args) -> Expr:
        f = (self.f1, self.f2)[i]
        return substitute(f, dict(zip(self.coords, args)))


def _log_ansatz(fs: Sequence[Expr], coords: Sequence[str], box) -> tuple[list, Expr] | None:
    """Exact phi with grad phi = fs of the form sum a_i ln|g_i| + P, or None.

    g_i are the denominator factors of the fs, P a polynomial.  Returns the
    list of (g_i, a_i) and P.
    """
    b = RationalBuilder(coords, strict=True)
    try:
        for f in fs:
            b.collect(f)
    except ValueError:
        return None
    if len(b.gens) != len(coords):
        return None
    try:
        forms = [b.convert(f) for f in fs]
    except (ValueError, ZeroDivisionError):
        return None
    factors = {}
    top_deg = 0
    for rf in forms:
        for key, (g, k) in rf.den.items():
            factors[key] = g
        top_deg = max(top_deg, rf.num.total_degree())
    factors = list(factors.values())
    deg = top_deg + 1
    monos = [m for m in _monomials(len(coords), deg) if any(m)]
    n_unknowns = len(factors) + len(monos)
    unknowns = [Param(f"_a{i}") for i in range(n_unknowns)]
    gx = [g.to_expr({c: Var(c) for c in coords}) for g in factors]
    P = add(*(mul(unknowns[len(factors) + j], *(power(Var(c), k) for c, k in zip(coords, m) if k))
              for j, m in enumerate(monos)))
    rows, rhs = [], []
    for f, c in zip(fs, coords):
        expr = add(*(mul(unknowns[i], diff(g, c), power(g, -1)) for i, g in enumerate(gx)), diff(P, c), neg(f))
        rb = RationalBuilder(list(coords) + [u.name for u in unknowns], strict=True)
        num = rb.convert(expr).num
        eqs: dict = {}
        for m, coef in num.terms.items():
            cm, um = m[:len(coords)], m[len(coords):]
            row = eqs.setdefault(cm, [dict(), Fraction(0)])
            if any(um):
                if sum(um) != 1:
                    return None
                row[0][um.index(1)] = row[0].get(um.index(1), 0) + coef
            else:
                row[1] -= coef
        for r, v in eqs.values():
            rows.append(r)
            rhs.append(v)
    sol = solve(rows, rhs, n_unknowns)
    if sol is None:
        return None
    logs = [(g, sol[i]) for i, g in enumerate(gx) if sol[i] != 0]
    poly = substitute(P, {u.name: v for u, v in zip(unknowns, sol)})
    # orient each factor positive on the box centre
    centre = {c: 0.5 * (box[c][0] + box[c][1]) for c in coords}
    oriented = []
    for g, a in logs:
        if evaluate(g, centre) < 0:
            g = neg(g)
        oriented.append((g, a))
    return oriented, poly


def _monomials(nvars: int, deg: int):
    if nvars == 0:
        yield ()
        return
    for k in range(deg + 1):
        for rest in _monomials(nvars - 1, deg - k):
            yield (k,) + rest


class LogPotential:
    """phi with grad phi = (f1, f2); exact when the log ansatz succeeds."""

    def __init__(self, fs: Sequence[Expr], coords: Sequence[str], box, base=None, name: str = "phi"):
        self.fs = list(fs)
        self.coords = tuple(coords)
        res = _log_ansatz(self.fs, self.coords, box)
        self.exact = res is not None
        if res is not None:
            self.logs, self.poly = res
            self.path = None
        else:
            self.logs, self.poly = [], ZERO
            if base is None:
                base = [0.5 * (box[c][0] + box[c][1]) for c in self.coords]
            fs2 = self.fs + [ZERO] * (2 - len(self.fs))
            self.path = Apply(PathPotential(name, self.coords, fs2[0], fs2[1], base), [Var(c) for c in self.coords])

    def exp_of(self, scale) -> Expr:
        """exp(scale * phi) as an expression."""
        scale = Fraction(scale)
        if self.path is not None:
            return func("exp", mul(Const(scale), self.path))
        fs = [power(g, a * scale) for g, a in self.logs]
        return mul(*fs, func("exp", mul(Const(scale), self.poly)))


def _depends_on(e: Expr, var: str, box, singular) -> bool:
    d = diff(e, var)
    if d.is_zero:
        return False
    return not is_identically_zero(d, box, singular=singular).is_zero


def classify_2d(
    conn: Connection,
    box: Mapping[str, tuple[float, float]] | None = None,
    singular: Sequence[Expr] = (),
    base_point: Sequence[float] | None = None,
    seed: int = 0,
) -> Classification:
    """Decide whether a 2d connection with only G^1_11, G^2_22 is metric.

    A flat connection gets the identity metric (case 4 with f = h = 1,
    c0 = 0).  Otherwise the general case 1 metric F*offdiag is tried first
    and the separable cases 4, 2, 3 serve as fallbacks when F cannot be
    constructed.  Each returned metric has a zero metricity residual and a
    determinant that is not identically zero.
    """
    if conn.dim != 2:
        raise ValueError("classification is defined for two dimensions only")
    x, y = conn.coords
    box = dict(box or {x: (0.5, 1.5), y: (0.5, 1.5)})
    for (a, b, c), v in conn.items():
        if (a, b, c) not in ((0, 0, 0), (1, 1, 1)):
            if not is_identically_zero(v, box, singular=singular, seed=seed).is_zero:
                raise ValueError(f"connection component G^{a + 1}_{b + 1}{c + 1} is not zero")
    f1, f2 = conn.gamma(0, 0, 0), conn.gamma(1, 1, 1)
    crit = add(diff(f1, y), neg(diff(f2, x)))
    verdict = is_identically_zero(crit, box, singular=singular, seed=seed)
    if verdict.kind == NON_ZERO:
        return Classification("NonRiemannian", witness=verdict.witness, criterion=verdict)
    x_only = not _depends_on(f1, y, box, singular)
    y_only = not _depends_on(f2, x, box, singular)
    attempts = []
    if f1.is_zero and f2.is_zero:
        attempts.append((4, lambda: (_metric(ONE, ZERO, ONE), None)))
    pF = LogPotential([f1, f2], (x, y), box, base_point, name="lnF")
    attempts.append((1, lambda: _case1(pF)))
    if x_only and y_only:
        pf = LogPotential([f1, ZERO], (x, y), box, base_point, name="phi1")
        ph = LogPotential([ZERO, f2], (x, y), box, base_point, name="phi2")
        attempts.append((4, lambda: _case4(pf, ph)))
        attempts.append((2, lambda: _case2(pf, ph)))
        attempts.append((3, lambda: _case3(pf, ph)))
    notes = []
    for case, build in attempts:
        try:
            g, potential = build()
            metric = MetricField.from_tensor(g)
            res = metricity_residual(conn, g)
            report = {}
            ok = True
            for (idx, c), r in res.items():
                v = is_identically_zero(r, box, singular=singular, seed=seed)
                report[",".join(str(i + 1) for i in idx) + "|" + str(c + 1)] = v.kind
                ok = ok and v.is_zero
            det_v = is_identically_zero(metric.det, box, singular=singular, seed=seed, exact=True)
            if ok and not det_v.is_zero:
                return Classification("Riemannian", case=case, metric=metric, potential=potential,
                                      criterion=verdict, metricity=report)
            notes.append(f"case {case}: metricity {report}, det {det_v.kind}")
        except ArithmeticError as exc:
            notes.append(f"case {case}: {exc}")
    return Classification("Indeterminate", criterion=verdict, diagnostics="; ".join(notes))


def _metric(g11, g12, g22) -> SymTensorField:
    return SymTensorField(2, 2, {(0, 0): g11, (0, 1): g12, (1, 1): g22})


def _case4(pf: LogPotential, ph: LogPotential):
    # f1 = f'/(2f), f2 = h'/(2h); c0 = 0
    f, h = pf.exp_of(2), ph.exp_of(2)
    return _metric(f, ZERO, h), None


def _case2(pf: LogPotential, ph: LogPotential):
    # f1 = f'/(2f), f2 = h'/h
    f, h = pf.exp_of(2), ph.exp_of(1)
    return _metric(f, mul(h, power(f, Fraction(1, 2))), ZERO), None


def _case3(pf: LogPotential, ph: LogPotential):
    # f1 = f'/f, f2 = h'/(2h)
    f, h = pf.exp_of(1), ph.exp_of(2)
    return _metric(ZERO, mul(f, power(h, Fraction(1, 2))), h), None


def _case1(pF: LogPotential):
    F = pF.exp_of(1)
    return _metric(ZERO, F, ZERO), F


# ---------------------------------------------------------------------------
# the coupled-oscillator family
# ---------------------------------------------------------------------------

@dataclass
class OscillatorFamily:
    L: tuple[Expr, Expr]
    connection: Connection
    system: SystemDef
    non_riemannian: bool
    criterion: ZeroVerdict


def oscillator_family(
    F1: Expr | None = None,
    s0=0,
    k=1,
    p=1,
    arg: str = "xi",
    coords: Sequence[str] = ("x", "y"),
    box: Mapping[str, tuple[float, float]] | None = None,
    name: str = "coupled-oscillators-family",
) -> OscillatorFamily:
    """Generalized KV, connection and system of the coupled-oscillator family.

    F1 is an expression in the variable ``arg`` (default 1).  k, p, s0 may be
    numbers or expressions.
    """
    x, y = (Var(c) for c in coords)
    k, p, s0 = to_expr(k), to_expr(p), to_expr(s0)
    if k.is_zero or p.is_zero:
        raise ValueError("k and p must be nonzero")
    xi = add(mul(p, add(power(y, 2), neg(power(x, 2)))), mul(Const(-2), k, x, y))
    F = substitute(to_expr(1 if F1 is None else F1), {arg: xi})
    a = add(mul(k, y), mul(p, x))          # ky + px
    bq = add(mul(k, x), neg(mul(p, y)))   # kx - py
    L2 = add(mul(neg(bq), F), neg(mul(s0, x, power(xi, -1))))
    L1 = add(mul(a, F), mul(s0, x, a, power(bq, -1), power(xi, -1)), mul(s0, power(bq, -1)))
    box = dict(box or {coords[0]: (0.5, 1.5), coords[1]: (0.1, 0.9)})
    for L in (L1, L2):
        if L.is_zero or is_identically_zero(L, box).kind != NON_ZERO:
            raise ValueError("generalized Killing vector component vanishes identically")
    g1 = mul(diff(L1, coords[0]), power(L1, -1))
    g2 = mul(diff(L2, coords[1]), power(L2, -1))
    conn = Connection(coords, {(0, 0, 0): g1, (1, 1, 1): g2})
    singular = [L1, L2]
    if not s0.is_zero:
        singular += [xi, bq]
    system = SystemDef(name, conn, [bq, a], domain=box, singular=singular)
    # (ln|L1/L2|)_{,xy} = (L1_x/L1 - L2_x/L2)_{,y}
    crit = diff(add(g1, neg(mul(diff(L2, coords[0]), power(L2, -1)))), coords[1])
    verdict = is_identically_zero(crit, box, singular=singular, n=10)
    return OscillatorFamily((L1, L2), conn, system, verdict.kind == NON_ZERO, verdict)
