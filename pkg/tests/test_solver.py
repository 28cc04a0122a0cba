from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from firstint.catalog import beta_system
from firstint.expr import Const, Var, exact_zero, mul, parse
from firstint.geometry import Connection, oscillator_family
from firstint.linalg import exact_rank, float_rank, nullspace, solve
from firstint.solver import (
    AnsatzSpec, SizeCapExceeded, find_generalized_kts, find_reducible_kt_generators, kt_system,
)
from firstint.tensor import SymTensorField, sym_cov_derivative

XY = ("x", "y")
FLAT = Connection.flat(XY)


def beta_conn():
    e = beta_system()
    return e.system.bound().connection


def test_nullspace_examples():
    assert nullspace([[1, 0], [0, 1]]) == []
    assert sorted(nullspace([[0, 0, 0]], 3)) == sorted([[1, 0, 0], [0, 1, 0], [0, 0, 1]])
    (v,) = nullspace([[1, 1, 0], [0, 0, 1]])
    assert v in ([1, -1, 0], [-1, 1, 0])


def test_nullspace_has_integer_content_one():
    (v,) = nullspace([[Fraction(1, 2), Fraction(1, 3), 0], [0, 0, 1]])
    assert v in ([2, -3, 0], [-2, 3, 0])


def test_solve_and_inconsistent_system():
    rows = [{0: Fraction(1), 1: Fraction(1)}, {0: Fraction(1), 1: Fraction(-1)}]
    assert solve(rows, [Fraction(3), Fraction(1)], 2) == [2, 1]
    assert solve([{0: Fraction(1)}, {0: Fraction(2)}], [Fraction(1), Fraction(3)], 1) is None


small = st.integers(-3, 3)


@given(st.integers(1, 5), st.integers(1, 6).flatmap(lambda n: st.lists(st.lists(small, min_size=n, max_size=n), min_size=1, max_size=5)))
def test_nullspace_against_sympy(_, rows):
    n = len(rows[0])
    basis = nullspace(rows, n)
    M = sp.Matrix(rows)
    assert len(basis) == n - M.rank()
    for v in basis:
        assert all(x == 0 for x in M * sp.Matrix(v))
    assert exact_rank(rows, n) == M.rank() == float_rank(rows, n)


def test_flat_kvs():
    basis = find_generalized_kts(FLAT, 1, 1)
    assert len(basis) == 3
    x, y = Var("x"), Var("y")
    rot = SymTensorField(2, 1, {(0,): mul(Const(-1), y), (1,): x})
    span = [[T[(0,)], T[(1,)]] for T in basis]
    # the rotation lies in the span: solve with sampled values
    pts = [{"x": 0.3, "y": 0.7}, {"x": -1.1, "y": 0.2}, {"x": 0.5, "y": -0.9}]
    from firstint.expr import evaluate
    A = np.array([[evaluate(c, p) for p in pts for c in comp] for comp in span]).T
    b = np.array([evaluate(c, p) for p in pts for c in (rot[(0,)], rot[(1,)])])
    coef, res, *_ = np.linalg.lstsq(A, b, rcond=None)
    assert np.allclose(A @ coef, b)


def test_flat_kv_dimension_stable_under_degree():
    assert len(find_generalized_kts(FLAT, 1, 2)) == 3
    assert len(find_generalized_kts(FLAT, 1, 3)) == 3


def test_flat_order2_kts():
    s = kt_system(FLAT, AnsatzSpec(2, 2, XY))
    assert len(s.nullspace()) == 6
    assert s.exact_rank() == s.float_rank(1e-8)


@pytest.mark.parametrize("order,degree", [(1, 0), (1, 1), (1, 2), (2, 0), (2, 1), (2, 2), (2, 3), (3, 2)])
def test_dimension_monotone_and_exact_matches_float_rank(order, degree):
    s = kt_system(FLAT, AnsatzSpec(order, degree, XY))
    assert s.exact_rank() == s.float_rank()
    if degree:
        assert len(kt_system(FLAT, AnsatzSpec(order, degree - 1, XY)).nullspace()) <= len(s.nullspace())


def test_basis_elements_are_killing():
    conn = oscillator_family(k=2, p=1).connection
    for T in find_generalized_kts(conn, 1, 1):
        assert all(exact_zero(v) for _, v in sym_cov_derivative(T, conn).items())


def test_oscillator_kv_found():
    conn = oscillator_family(k=2, p=1).connection
    basis = find_generalized_kts(conn, 1, 1)
    assert len(basis) >= 1


@pytest.mark.parametrize("degree", range(5))
def test_beta_has_no_polynomial_kvs(degree):
    s = kt_system(beta_conn(), AnsatzSpec(1, degree, ("u", "w")))
    assert s.nullspace() == []
    assert s.exact_rank() == s.float_rank()


@pytest.mark.parametrize("degree", range(5))
def test_beta_has_no_reducible_generators(degree):
    assert find_reducible_kt_generators(beta_conn(), degree) == []


def test_flat_reducible_generators():
    # linear B modulo the three plane KVs leaves three generators whose
    # B_(a|b) are constant; together they span the constant order-2 KTs, so
    # B = (x, y) with B_(a|b) = identity is covered
    gens = find_reducible_kt_generators(FLAT, 1)
    assert len(gens) == 3
    rows = []
    for g in gens:
        assert sym_cov_derivative(g.tensor, FLAT).is_zero()
        rows.append([g.tensor[idx].value for idx in ((0, 0), (0, 1), (1, 1))])
    assert exact_rank(rows, 3) == 3
    assert find_reducible_kt_generators(FLAT, 0) == []


def test_non_rational_connection_rejected():
    conn = Connection(XY, {(0, 0, 0): parse("exp(x)", XY)})
    with pytest.raises(ValueError):
        find_generalized_kts(conn, 1, 1)


def test_size_cap():
    with pytest.raises(SizeCapExceeded):
        find_generalized_kts(FLAT, 2, 7)
    with pytest.raises(SizeCapExceeded):
        find_generalized_kts(FLAT, 2, 3, coefficient_cap=10)
