"""Built-in example systems with their first integrals and symmetries."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping

from .conditions import (
    ExpTimeCandidate, PolyTimeCandidate, build_integral1, exp_candidate_from_expression,
    velocity_coefficients,
)
from .dynamics import State
from .expr import Const, Expr, Param, Var, diff, mul, parse, power, substitute
from .expr.implicit import BranchCollisionError, ImplicitFunction, NoRealRootError
from .geometry import Connection, SystemDef, oscillator_family
from .io import exact_number
from .tensor import SymTensorField


@dataclass
class FIEntry:
    name: str
    kind: str                  # "poly" or "exp"
    expr: Expr
    conserved: bool = True
    anchor: str = ""
    candidate: PolyTimeCandidate | ExpTimeCandidate | None = None


@dataclass
class Symmetry:
    name: str
    kind: str                  # "KV" or "KT"
    tensor: SymTensorField
    anchor: str = ""


@dataclass
class CatalogEntry:
    name: str
    system: SystemDef
    fis: list[FIEntry]
    ic: State
    t_end: float
    symmetries: list[Symmetry] = field(default_factory=list)
    drift_tol: float = 1e-8
    description: str = ""

    def fi(self, name: str) -> FIEntry:
        for f in self.fis:
            if f.name == name:
                return f
        raise KeyError(name)


def _params(defaults: Mapping[str, object], given: Mapping[str, object] | None, nonzero=()) -> dict:
    given = dict(given or {})
    unknown = set(given) - set(defaults)
    if unknown:
        raise ValueError(f"unknown parameters {sorted(unknown)}; expected {sorted(defaults)}")
    out = {k: exact_number(given.get(k, v)) for k, v in defaults.items()}
    for k in nonzero:
        if out[k] == 0:
            raise ValueError(f"parameter {k} must be nonzero")
    return out


# ---------------------------------------------------------------------------
# coupled oscillators with a non-Riemannian quadratic damping term
# ---------------------------------------------------------------------------

def _oscillators(name: str, params: dict, F1: Expr | None, t_end: float) -> CatalogEntry:
    k, p, s0 = Const(params["k"]), Const(params["p"]), Const(params.get("s0", 0))
    fam = oscillator_family(F1, s0, k, p, name=name)
    sys = fam.system
    sys.description = "two linearly coupled oscillators, damping -L1_x/L1 xdot^2, -L2_y/L2 ydot^2"
    L = SymTensorField(2, 1, {(0,): fam.L[0], (1,): fam.L[1]})
    cand = PolyTimeCandidate(2, 1, 0, {(0, 1): L}, s0=s0)
    lfi = FIEntry("I1", "poly", build_integral1(cand, sys), True, "autonomous LFI L_a q'^a + s0 t", cand)
    return CatalogEntry(name, sys, [lfi], State(0.0, (1.0, 0.5), (0.1, -0.2)), t_end,
                        [Symmetry("L", "KV", L, "generalized KV of the damping connection")],
                        description=sys.description)


def coupled_oscillators_nr(params=None) -> CatalogEntry:
    """Fixed instance F1 = 1, s0 = 0."""
    return _oscillators("coupled-oscillators-nr", _params({"k": 2, "p": 1}, params, ("k", "p")), None, 0.8)


def coupled_oscillators_family(params=None, F1: str | Expr | None = None) -> CatalogEntry:
    """The family in k, p, s0 with F1 an expression in xi = p(y^2 - x^2) - 2kxy."""
    pr = _params({"k": 2, "p": 1, "s0": 1}, params, ("k", "p"))
    if isinstance(F1, str):
        F1 = parse(F1, ["xi"])
    return _oscillators("coupled-oscillators-family", pr, F1, 0.6)


# ---------------------------------------------------------------------------
# the beta system: a non-Riemannian connection with one QFI
# ---------------------------------------------------------------------------

def beta_system(params=None) -> CatalogEntry:
    pr = _params({"beta": Fraction(1, 2)}, params, ("beta",))
    U, P = ["u", "w"], ["beta"]
    a = parse("-8*beta*w/u^3", U, P)
    b = parse("4*beta/u^2", U, P)
    conn = Connection(U, {(0, 0, 0): a, (1, 0, 1): a, (0, 0, 1): b, (1, 1, 1): b})
    sys = SystemDef("beta-system", conn, [parse("1/u^2", U), parse("-2*w/u^3", U)], params=pr,
                    domain={"u": (0.5, 1.5), "w": (-0.5, 0.5)}, singular=[Var("u")],
                    description="non-Riemannian connection in (u, w) with a single QFI")
    A = parse("exp(12*beta*w/u^2)", U, P)
    kt = SymTensorField(2, 2, {(0, 1): A})
    cand = PolyTimeCandidate(2, 2, 0, {(0, 2): kt.scale(Fraction(1, 2))},
                             G=mul(A, power(mul(Const(12), Param("beta")), -1)))
    qfi = FIEntry("QFI", "poly", build_integral1(cand, sys), True,
                  "exp(12 beta w/u^2)(u'w' + 1/(12 beta))", cand)
    return CatalogEntry("beta-system", sys, [qfi], State(0.0, (1.0, 0.1), (1.6, -0.2)), 5.0,
                        [Symmetry("K", "KT", kt, "exp(12 beta w/u^2) du dw")], description=sys.description)


# ---------------------------------------------------------------------------
# three-dimensional superintegrable potential with time-dependent QFIs
# ---------------------------------------------------------------------------

EVANS_V = "-lam^2/2*(x^2 + y^2) + k*x/(y^2*sqrt(x^2 + y^2)) + c1/y^2 - lam^2/8*z^2 + c2/z^2"
_M3 = "(x*ydot - y*xdot)"
_R = "sqrt(x^2 + y^2)"
EVANS_FIS = {
    "I1": f"(xdot^2 + ydot^2 + zdot^2)/2 + {EVANS_V}",
    "I2": f"{_M3}^2/2 + (k*{_R} + c1*x)*x/y^2",
    "I3": "zdot^2/2 - lam^2/8*z^2 + c2/z^2",
    "I4": f"exp(lam*t)*({_M3}*(ydot - lam*y) + 2*c1*x/y^2 + k*(y^2 + 2*x^2)/(y^2*{_R}))",
    "I5": "exp(lam*t)*((zdot - lam/2*z)^2 + 2*c2/z^2)",
}


def evans_e3(params=None) -> CatalogEntry:
    pr = _params({"lam": 1, "k": Fraction(3, 10), "c1": Fraction(1, 5), "c2": Fraction(1, 2)}, params, ("lam",))
    X = ["x", "y", "z"]
    names = X + ["xdot", "ydot", "zdot", "t"]
    P = list(pr)
    V = parse(EVANS_V, X, P)
    sys = SystemDef("evans-e3", Connection.flat(X), [diff(V, c) for c in X], params=pr,
                    domain={"x": (0.2, 1.0), "y": (0.3, 1.0), "z": (0.3, 1.0)}, singular=[Var("y"), Var("z")],
                    description="V = " + EVANS_V)
    fis = []
    for name, text in EVANS_FIS.items():
        e = parse(text, names, P)
        if name in ("I4", "I5"):
            cand, _ = exp_candidate_from_expression(e, Param("lam"), sys, 2)
            fis.append(FIEntry(name, "exp", e, True, "time-dependent QFI with factor exp(lam t)", cand))
        else:
            co = velocity_coefficients(e, sys, 2)
            cand = PolyTimeCandidate(3, 2, 0, {(0, r): co[r] for r in (1, 2) if not co[r].is_zero()}, G=co[0][()])
            fis.append(FIEntry(name, "poly", e, True, "autonomous QFI", cand))
    return CatalogEntry("evans-e3", sys, fis, State(0.0, (0.6, 0.8, 0.7), (0.1, -0.2, 0.3)), 2.0,
                        description=sys.description)


# ---------------------------------------------------------------------------
# separable potential c1 y^2 + F(x) with a cubic integral
# ---------------------------------------------------------------------------

GRAVEL_PHI = (
    "k2*x^2 + 4*k1^2 + (9*F - c1*x^2)*(F - c1*x^2)^3 - 4*k1*(F - c1*x^2)*(3*F + c1*x^2)"
    " + 4*k3*(3*F - c1*x^2)*(F - c1*x^2)^2 + 4*k3^2*(F - c1*x^2)^2 - 8*k1*k3/3*(3*F - c1*x^2)"
)
GRAVEL_SEED = "c1*x^2/9"
_GRAVEL_DEFAULTS = {"c1": 1, "k1": 0, "k2": 0, "k3": 0}


def gravel_relation(params) -> Expr:
    """Phi(x, F) with the parameters substituted."""
    pr = _params(_GRAVEL_DEFAULTS, params, ("c1",))
    return substitute(parse(GRAVEL_PHI, ["x", "F"], list(pr)), pr)


def gravel_function(params=None, seed: str = GRAVEL_SEED) -> ImplicitFunction:
    pr = _params(_GRAVEL_DEFAULTS, params, ("c1",))
    return ImplicitFunction("F", "x", "F", gravel_relation(pr), substitute(parse(seed, ["x"], ["c1"]), {"c1": pr["c1"]}))


def gravel_F(x: float, params=None, branch: str | int = "nearest", guess: float | None = None) -> tuple[float, float]:
    """(F, F') at x on a branch of Phi(x, F) = 0.

    ``branch`` is "nearest" (root nearest ``guess``, default the seed
    c1 x^2/9) or an index into the sorted real roots.
    """
    fn = gravel_function(params)
    if branch == "nearest":
        F = fn.solve(x, fn._seed(x)[0] if guess is None else guess)
    else:
        roots = fn.roots(x)
        if not roots.size:
            raise NoRealRootError(f"no real root at x={x}")
        try:
            F = float(roots[int(branch)])
        except IndexError:
            raise ValueError(f"branch index {branch} out of range for {roots.size} real roots") from None
    phi_f = fn._phi_f(x, F)[0]
    if abs(phi_f) <= 1e-12 * max(1.0, abs(F)) ** 3:
        raise BranchCollisionError(f"Phi_F vanishes at x={x}, F={F}")
    return F, -fn._phi_x(x, F)[0] / phi_f


def gravel_cubic(params=None) -> CatalogEntry:
    pr = _params(_GRAVEL_DEFAULTS, params, ("c1",))
    Ff = gravel_function(pr)
    X = ["x", "y"]
    names = X + ["xdot", "ydot", "Fp"]
    x = Var("x")
    V = parse("c1*y^2 + F(x)", X, ["c1"], {"F": Ff})
    sys = SystemDef("gravel-cubic", Connection.flat(X), [diff(V, "x"), diff(V, "y")], params=pr,
                    domain={"x": (0.5, 2.0), "y": (-1.0, 1.0)}, functions={"F": Ff},
                    description="V = c1 y^2 + F(x), Phi(x, F) = 0")
    Fp = diff(Ff(x), "x")
    P = list(pr)

    def E(text):
        return substitute(parse(text, names, P, {"F": Ff}), {"Fp": Fp})

    I3 = E("(x*ydot - y*xdot)*xdot^2 - (3*y*F(x) - c1*x^2*y + k3*y)*xdot + Fp/(2*c1)*(3*F(x) - c1*x^2 + k3)*ydot")
    fis = []
    for name, e, m in (("I1", E("xdot^2/2 + F(x)"), 2), ("I2", E("ydot^2/2 + c1*y^2"), 2), ("I3", I3, 3)):
        co = velocity_coefficients(sys.bind(e), sys, m)
        cand = PolyTimeCandidate(2, m, 0, {(0, r): co[r] for r in range(1, m + 1) if not co[r].is_zero()},
                                 G=co[0][()])
        fis.append(FIEntry(name, "poly", e, True, "autonomous CFI" if m == 3 else "autonomous QFI", cand))
    return CatalogEntry("gravel-cubic", sys, fis, State(0.0, (1.2, 0.5), (1.3, -0.1)), 5.0,
                        drift_tol=1e-6, description=sys.description)


_FACTORIES: dict[str, Callable[..., CatalogEntry]] = {
    "coupled-oscillators-nr": coupled_oscillators_nr,
    "coupled-oscillators-family": coupled_oscillators_family,
    "beta-system": beta_system,
    "evans-e3": evans_e3,
    "gravel-cubic": gravel_cubic,
}


def list_catalog() -> list[str]:
    return sorted(_FACTORIES)


def instantiate(name: str, params: Mapping[str, object] | None = None, **kw) -> CatalogEntry:
    try:
        factory = _FACTORIES[name]
    except KeyError:
        raise KeyError(f"unknown catalog entry {name!r}; known: {', '.join(list_catalog())}") from None
    return factory(params, **kw)
