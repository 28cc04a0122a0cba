from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from firstint.catalog import beta_system
from firstint.expr import Const, Var, add, diff, exact_zero, is_identically_zero, mul, parse, substitute
from firstint.geometry import Connection, oscillator_family
from firstint.tensor import (
    SymTensorField, cov_derivative, gradient_field, multi_indices, sym_cov_derivative, symmetrize,
)

XY = ("x", "y")
FLAT = Connection.flat(XY)
BOX = {"x": (0.5, 1.5), "y": (0.5, 1.5)}


def zero_field(T, box=BOX, singular=()):
    return all(is_identically_zero(v, box, singular=singular).is_zero for _, v in T.items())


def test_component_count_and_permutation_access():
    T = SymTensorField.from_function(3, 3, lambda idx: Const(sum(idx) + 1))
    assert len(list(T.items())) == T.n_components() == 10
    assert T[(2, 0, 1)] == T[(0, 1, 2)] == T[(1, 2, 0)]


def test_get_examples():
    C = beta_system().symmetries[0].tensor
    assert C[(1, 0)] == C[(0, 1)] != Const(0)
    s = SymTensorField.scalar(2, Var("x"))
    assert s[()] == Var("x")
    with pytest.raises(IndexError):
        SymTensorField.zero(2, 2)[(0, 1, 1)]
    with pytest.raises(IndexError):
        SymTensorField.zero(2, 2)[(0, 2)]


def test_symmetrize_examples():
    a, b = Var("a"), Var("b")
    S = symmetrize({(0, 1): a, (1, 0): b}, 2, 2)
    assert S[(0, 1)] == mul(Const(Fraction(1, 2)), add(a, b))
    assert S[(0, 0)].is_zero and S[(1, 1)].is_zero
    assert symmetrize({(0, 1): a, (1, 0): mul(Const(-1), a)}, 2, 2).is_zero()
    T = SymTensorField.from_function(2, 3, lambda idx: Const(idx.count(0)))
    assert symmetrize(lambda idx: T[idx], 2, 3) == T


def test_flat_cov_derivative_is_partial():
    T = SymTensorField(2, 2, {(0, 0): parse("x^2*y", XY), (0, 1): parse("x - y^3", XY)})
    for (idx, c), v in cov_derivative(T, FLAT).items():
        assert exact_zero(add(v, mul(Const(-1), diff(T[idx], XY[c]))))


def test_scalar_cov_derivative_is_gradient():
    G = parse("x^2*exp(y)", XY)
    conn = oscillator_family(k=2, p=1).connection
    assert sym_cov_derivative(SymTensorField.scalar(2, G), conn) == gradient_field(G, XY)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        sym_cov_derivative(SymTensorField.zero(3, 1), FLAT)


def test_case1_metric_has_zero_metricity():
    F = parse("x*y + x^3", XY)
    conn = Connection(XY, {(0, 0, 0): mul(diff(F, "x"), F ** -1), (1, 1, 1): mul(diff(F, "y"), F ** -1)})
    g = SymTensorField(2, 2, {(0, 1): F})
    for v in cov_derivative(g, conn).values():
        assert is_identically_zero(v, BOX).is_zero


def test_oscillator_kv_is_killing():
    fam = oscillator_family(k=2, p=1)
    L = SymTensorField(2, 1, {(0,): fam.L[0], (1,): fam.L[1]})
    assert zero_field(sym_cov_derivative(L, fam.connection), singular=fam.system.singular)


def test_constant_field_is_killing_when_flat():
    T = SymTensorField.from_function(2, 3, lambda idx: Const(len(set(idx)) + 2))
    assert sym_cov_derivative(T, FLAT).is_zero()


def test_beta_kt_is_killing():
    e = beta_system()
    res = sym_cov_derivative(e.symmetries[0].tensor.map(e.system.bind), e.system.bound().connection)
    assert all(exact_zero(v) for _, v in res.items())


# polynomial tensors over the plane
coeff = st.fractions(min_value=-3, max_value=3, max_denominator=4)


@st.composite
def poly_tensors(draw, order):
    x, y = Var("x"), Var("y")
    comps = {}
    for idx in multi_indices(2, order):
        cs = draw(st.lists(coeff, min_size=6, max_size=6))
        monos = [Const(1), x, y, mul(x, x), mul(x, y), mul(y, y)]
        comps[idx] = add(*(mul(Const(c), m) for c, m in zip(cs, monos)))
    return SymTensorField(2, order, comps)


@given(st.integers(1, 3).flatmap(poly_tensors))
def test_flat_symmetrized_derivative_is_symmetrized_partials(T):
    r = T.order
    expected = symmetrize(lambda idx: diff(T[idx[:r]], XY[idx[r]]), 2, r + 1)
    got = sym_cov_derivative(T, FLAT)
    for idx, v in got.items():
        assert exact_zero(add(v, mul(Const(-1), expected[idx])))


@given(st.integers(0, 3).flatmap(poly_tensors), st.permutations([0, 1, 1]))
def test_storage_round_trip(T, perm):
    if T.order == 3:
        assert T[tuple(perm)] == T[tuple(sorted(perm))]
    rebuilt = SymTensorField(2, T.order, {idx[::-1]: v for idx, v in T.items()})
    assert rebuilt == T


def test_symmetrize_idempotent_on_random_tensor():
    T = SymTensorField.from_function(3, 2, lambda idx: substitute(parse("x*y + z", ("x", "y", "z")), {"z": idx[0] + 2 * idx[1]}))
    S = symmetrize(lambda idx: T[idx], 3, 2)
    assert all(exact_zero(add(S[idx], mul(Const(-1), v))) for idx, v in T.items())
