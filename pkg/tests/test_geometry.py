from fractions import Fraction

import pytest
import sympy as sp
from hypothesis import given, strategies as st

from firstint.catalog import beta_system
from firstint.expr import (
    EXACT_ZERO, NON_ZERO, Const, Var, add, diff, evaluate, exact_zero, is_identically_zero, mul, neg,
    parse, power, substitute, to_string,
)
from firstint.geometry import (
    Connection, SystemDef, classify_2d, curvature, metricity_residual, oscillator_family,
)
from firstint.tensor import SymTensorField, contract, sym_cov_derivative

XY = ("x", "y")
BOX = {"x": (0.5, 1.5), "y": (0.5, 1.5)}


def diag_conn(g1, g2):
    return Connection(XY, {(0, 0, 0): g1, (1, 1, 1): g2})


def sub(a, b):
    return add(a, neg(b))


def test_flat_curvature_vanishes():
    R = curvature(Connection.flat(("x", "y", "z")))
    assert not R.nonzero_items()


def test_beta_curvature_families():
    # symbol b in the displayed list is beta; the families hold for every beta
    conn = beta_system().system.connection
    R = curvature(conn)
    U, P = ["u", "w"], ["beta"]
    a = parse("-32*beta^2*w/u^5", U, P)
    c = parse("24*beta*w/u^4", U, P)
    # R^1_112 = R^2_221 = -R^2_212 = -R^1_121 = a ; R^2_112 = -R^2_121 = c
    for idx, sign, val in [((0, 0, 0, 1), 1, a), ((1, 1, 1, 0), 1, a), ((1, 1, 0, 1), -1, a),
                           ((0, 0, 1, 0), -1, a), ((1, 0, 0, 1), 1, c), ((1, 0, 1, 0), -1, c)]:
        assert exact_zero(sub(R[idx], mul(Const(sign), val))), idx
    listed = {(0, 0, 0, 1), (1, 1, 1, 0), (1, 1, 0, 1), (0, 0, 1, 0), (1, 0, 0, 1), (1, 0, 1, 0)}
    for idx, v in R.components.items():
        if idx not in listed:
            assert exact_zero(v), idx


def test_beta_curvature_matches_sympy():
    u, w, b = sp.symbols("u w beta")
    q = [u, w]
    G = [[[0] * 2 for _ in range(2)] for _ in range(2)]
    G[0][0][0] = G[1][0][1] = G[1][1][0] = -8 * b * w / u**3
    G[0][0][1] = G[0][1][0] = G[1][1][1] = 4 * b / u**2
    R = curvature(beta_system().system.connection)
    pt = {"u": 1.3, "w": -0.4, "beta": 0.7}
    for (a, bb, c, d), v in R.components.items():
        ref = sp.diff(G[a][bb][d], q[c]) - sp.diff(G[a][bb][c], q[d]) + sum(
            G[a][s][c] * G[s][bb][d] - G[a][s][d] * G[s][bb][c] for s in range(2))
        assert evaluate(v, pt) == pytest.approx(float(ref.subs({u: 1.3, w: -0.4, b: 0.7})), abs=1e-12)


def test_case1_curvature_against_finite_differences():
    g1, g2 = parse("1/x", XY), parse("1/y", XY)
    conn = diag_conn(g1, g2)
    R = curvature(conn)
    pt = {"x": 2.0, "y": 3.0}
    h = 1e-5

    def G(a, b, c, p):
        return evaluate(conn.gamma(a, b, c), p)

    def dG(a, b, c, var):
        up, dn = dict(pt), dict(pt)
        up[var] += h
        dn[var] -= h
        return (G(a, b, c, up) - G(a, b, c, dn)) / (2 * h)

    for (a, b, c, d), v in R.components.items():
        ref = dG(a, b, d, XY[c]) - dG(a, b, c, XY[d]) + sum(
            G(a, s, c, pt) * G(s, b, d, pt) - G(a, s, d, pt) * G(s, b, c, pt) for s in range(2))
        assert evaluate(v, pt) == pytest.approx(ref, abs=1e-8)


@pytest.mark.parametrize("conn", [
    beta_system().system.connection,
    oscillator_family(k=2, p=1).connection,
    diag_conn(parse("x*y", XY), parse("x^2 - y", XY)),
])
def test_curvature_antisymmetry(conn):
    for v in curvature(conn).antisymmetry_residuals().values():
        assert exact_zero(v)


def test_metricity_examples():
    ident = SymTensorField(2, 2, {(0, 0): 1, (1, 1): 1})
    assert all(v.is_zero for v in metricity_residual(Connection.flat(XY), ident).values())
    F = parse("x^2*y + 1", XY)
    conn = diag_conn(mul(diff(F, "x"), power(F, -1)), mul(diff(F, "y"), power(F, -1)))
    g = SymTensorField(2, 2, {(0, 1): F})
    assert all(exact_zero(v) for v in metricity_residual(conn, g).values())
    osc = oscillator_family(k=2, p=1).connection
    res = metricity_residual(osc, ident)
    assert any(abs(evaluate(v, {"x": 1.0, "y": 1.0})) > 1e-6 for v in res.values())


def test_classify_oscillator_connection_nonriemannian():
    conn = diag_conn(parse("p/(k*y + p*x)", XY, ["k", "p"]), parse("p/(p*y - k*x)", XY, ["k", "p"]))
    conn = conn.map(lambda e: substitute(e, {"k": 2, "p": 1}))
    c = classify_2d(conn, singular=[parse("2*y + x", XY), parse("y - 2*x", XY)])
    assert c.kind == "NonRiemannian" and c.witness is not None


def test_classify_log_connection_case1():
    c = classify_2d(diag_conn(parse("1/x", XY), parse("1/y", XY)))
    assert c.kind == "Riemannian" and c.case == 1
    F = c.metric.tensor[(0, 1)]
    ratio = [evaluate(F, {"x": x, "y": y}) / (x * y) for x, y in [(0.6, 0.7), (1.2, 0.9), (1.4, 1.4)]]
    assert ratio[0] == pytest.approx(ratio[1]) == pytest.approx(ratio[2])
    assert set(c.metricity.values()) == {EXACT_ZERO}


def test_classify_flat_case4():
    c = classify_2d(Connection.flat(XY))
    assert c.kind == "Riemannian" and c.case == 4
    assert c.metric.tensor == SymTensorField(2, 2, {(0, 0): 1, (1, 1): 1})


def test_classify_rejects_other_components():
    with pytest.raises(ValueError):
        classify_2d(Connection(XY, {(0, 0, 1): parse("x", XY)}))
    with pytest.raises(ValueError):
        classify_2d(Connection.flat(("x", "y", "z")))


def test_classify_path_potential_case1():
    # (ln F),x = f1 with no closed log form: F = exp(x*y + x^3)
    c = classify_2d(diag_conn(parse("y + 3*x^2", XY), parse("x", XY)))
    assert c.kind == "Riemannian"
    for v in metricity_residual(diag_conn(parse("y + 3*x^2", XY), parse("x", XY)), c.metric).values():
        assert is_identically_zero(v, BOX).is_zero


positive_poly = st.tuples(st.integers(1, 4), st.integers(0, 3), st.integers(0, 3))


def _poly(cs, v):
    a, b, c = cs
    return parse(f"{a} + {b}*{v} + {c}*{v}^2", XY)


@given(positive_poly, positive_poly, st.sampled_from([1, 2, 3, 4]))
def test_classify_recovers_metric_cases(fc, hc, case):
    f, h = _poly(fc, "x"), _poly(hc, "y")
    half = Const(Fraction(1, 2))
    if case == 1:
        F = mul(f, h, add(Var("x"), Var("y")))
        g1, g2 = mul(diff(F, "x"), power(F, -1)), mul(diff(F, "y"), power(F, -1))
    else:
        k1 = half if case in (2, 4) else Const(1)
        k2 = half if case in (3, 4) else Const(1)
        g1 = mul(k1, diff(f, "x"), power(f, -1))
        g2 = mul(k2, diff(h, "y"), power(h, -1))
    conn = diag_conn(g1, g2)
    c = classify_2d(conn)
    assert c.kind == "Riemannian"
    for v in metricity_residual(conn, c.metric).values():
        assert is_identically_zero(v, BOX).is_zero
    assert not is_identically_zero(c.metric.det, BOX).is_zero


@given(st.sampled_from(["x*y", "x/y", "x^2 + y", "1/(x + y)", "y^2"]), st.sampled_from(["x", "y", "x*y", "x + 2*y", "1/x"]))
def test_classify_nonriemannian_iff_criterion(t1, t2):
    g1, g2 = parse(t1, XY), parse(t2, XY)
    crit = sub(diff(g1, "y"), diff(g2, "x"))
    c = classify_2d(diag_conn(g1, g2))
    assert (c.kind == "NonRiemannian") == (is_identically_zero(crit, BOX).kind == NON_ZERO)


def test_oscillator_family_examples():
    fam = oscillator_family(k=2, p=1)
    L1, L2 = fam.L
    assert exact_zero(sub(L1, parse("2*y + x", XY)))
    assert exact_zero(sub(L2, parse("y - 2*x", XY)))
    assert exact_zero(sub(fam.connection.gamma(0, 0, 0), parse("1/(2*y + x)", XY)))
    assert exact_zero(sub(fam.connection.gamma(1, 1, 1), parse("1/(y - 2*x)", XY)))
    assert fam.non_riemannian
    fam = oscillator_family(k=1, p=1)
    pt = {"x": 1.0, "y": 0.0}
    assert (evaluate(fam.L[0], pt), evaluate(fam.L[1], pt)) == (1.0, -1.0)
    with pytest.raises(ValueError):
        oscillator_family(k=0, p=1)


@pytest.mark.parametrize("F1,s0", [(None, 0), ("1 + xi^2", 0), (None, 1), ("2 + xi", Fraction(1, 3))])
def test_oscillator_family_is_killing_with_constant_LQ(F1, s0):
    F = parse(F1, ["xi"]) if F1 else None
    fam = oscillator_family(F, s0, 2, 1)
    L = SymTensorField(2, 1, {(0,): fam.L[0], (1,): fam.L[1]})
    box, sing = fam.system.domain, fam.system.singular
    for _, v in sym_cov_derivative(L, fam.connection).items():
        assert is_identically_zero(v, box, singular=sing).is_zero
    LQ = contract(L, fam.system.forces)[()]
    assert is_identically_zero(sub(LQ, Const(s0)), box, singular=sing).is_zero


def test_system_param_binding():
    sys = beta_system().system
    assert sys.bound().params == {}
    assert "beta" not in to_string(sys.bound().connection.gamma(0, 0, 0))
    assert sys.with_params(beta=1).params["beta"] == 1
    with pytest.raises(ValueError):
        SystemDef("bad", Connection.flat(XY), [Const(0)])
