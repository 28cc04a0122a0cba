import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from firstint.catalog import beta_system, coupled_oscillators_nr, instantiate, list_catalog
from firstint.dynamics import (
    FIEvaluationError, SingularityError, State, StepUnderflowError, integrate, monitor_fi, rhs,
)
from firstint.expr import Var, parse
from firstint.geometry import Connection, SystemDef

from families import flat_system

XY = ("x", "y")
HARMONIC = flat_system([Var("x"), Var("y")])
ENERGY = parse("(xdot^2 + ydot^2 + x^2 + y^2)/2", ("x", "y", "xdot", "ydot"))


def test_rhs_examples():
    assert list(rhs(HARMONIC, State(0, (1, 2), (0, 0)))) == [-1, -2]
    beta = beta_system().system.with_params(beta=1)
    assert rhs(beta, State(0, (1, 0), (1, 0))) == pytest.approx([-1, 0])
    osc = coupled_oscillators_nr().system
    assert rhs(osc, State(0, (1, 1), (0, 0))) == pytest.approx([-1, -3])


def test_rhs_doubles_off_diagonal_terms():
    conn = Connection(XY, {(0, 0, 1): parse("1", XY)})
    sys = SystemDef("s", conn, [0, 0])
    assert rhs(sys, State(0, (0, 0), (1, 1))) == pytest.approx([-2, 0])


def test_state_validation():
    with pytest.raises(ValueError):
        State(0, (1.0,), (1.0, 2.0))
    with pytest.raises(ValueError):
        State(0, (math.nan,), (1.0,))
    with pytest.raises(ValueError):
        State.from_list([1, 2, 3])
    assert State.from_list([1, 2, 3, 4]) == State(0.0, (1.0, 2.0), (3.0, 4.0))


def test_harmonic_period():
    tr = integrate(HARMONIC, State(0, (1, 0), (0, 1)), 2 * math.pi)
    f = tr.final
    assert np.allclose(f.q + f.v, (1, 0, 0, 1), atol=1e-6)
    assert len(tr) >= 200 and np.all(np.diff(tr.t) > 0)


@given(st.lists(st.floats(-2, 2), min_size=4, max_size=4))
@settings(max_examples=10)
def test_straight_line(vals):
    s0 = State.from_list(vals)
    tr = integrate(flat_system([0, 0]), s0, 3.0)
    expected = np.array(s0.q)[None, :] + np.outer(tr.t, s0.v)
    assert np.allclose(tr.q, expected, atol=1e-9)


def test_rk4_order_four():
    s0 = State(0, (1, 0), (0, 1))
    errs = []
    for h in (0.1, 0.05):
        tr = integrate(HARMONIC, s0, 2.0, method="RK4", h=h)
        exact = (math.cos(2.0), math.sin(2.0))
        errs.append(np.linalg.norm(np.array(tr.final.q) - exact))
    assert 12 < errs[0] / errs[1] < 20


def test_integrate_argument_errors():
    s0 = State(0, (1, 0), (0, 1))
    with pytest.raises(ValueError):
        integrate(HARMONIC, s0, 0.0)
    with pytest.raises(ValueError):
        integrate(HARMONIC, s0, 1.0, rtol=0)
    with pytest.raises(ValueError):
        integrate(HARMONIC, s0, 1.0, method="RK4")
    with pytest.raises(ValueError):
        integrate(HARMONIC, s0, 1.0, method="Euler")
    with pytest.raises(ValueError):
        integrate(HARMONIC, State(0, (1,), (0,)), 1.0)


def test_singularity_stops_integration():
    # u' = -1 from u = 0.5 reaches the singular locus u = 0 at t = 0.5
    sys = flat_system([0, 0], ("u", "w"))
    sys.singular = [Var("u")]
    tr = integrate(sys, State(0, (0.5, 0), (-1, 0)), 2.0)
    assert tr.singular and tr.t[-1] == pytest.approx(0.5, abs=1e-5)
    tr = integrate(sys, State(0, (0.5, 0), (-1, 0)), 2.0, method="RK4", h=0.01)
    assert tr.singular
    with pytest.raises(SingularityError):
        integrate(sys, State(0, (0.0, 0), (1, 0)), 1.0)


def test_step_underflow_carries_partial_trajectory():
    # x'' = x^2 from x = 1, x' = 1 diverges in finite time
    sys = flat_system([parse("-x^2", XY), 0])
    with pytest.raises(StepUnderflowError) as info:
        integrate(sys, State(0, (1, 0), (1, 0)), 10.0)
    partial = info.value.trajectory
    assert partial is not None and len(partial) > 0 and partial.t[-1] < 10


def test_beta_spec_initial_data_blows_up():
    # u=1, w=0.1, u'=0.3, w'=-0.2 leaves every bounded region before t = 1.2
    e = beta_system()
    with pytest.raises(StepUnderflowError) as info:
        integrate(e.system, State(0, (1, 0.1), (0.3, -0.2)), 5.0)
    assert info.value.trajectory.t[-1] < 1.2


def test_energy_drift_and_negative_control():
    tr = integrate(HARMONIC, State(0, (1, 0), (0, 1)), 10.0)
    assert monitor_fi(tr, ENERGY, HARMONIC).max_rel <= 1e-9
    neg = monitor_fi(tr, Var("xdot"), HARMONIC, "xdot")
    assert neg.max_abs > 0.5


def test_oscillator_lfi_drift():
    e = coupled_oscillators_nr()
    # at rtol 1e-10 the drift sits near 5e-9; the 1e-9 bound needs rtol 1e-11
    tr = integrate(e.system, e.ic, e.t_end, rtol=1e-11, atol=1e-13)
    assert monitor_fi(tr, e.fi("I1").expr, e.system).max_rel <= 1e-9


@pytest.mark.parametrize("name", list_catalog())
def test_catalog_drift(name):
    e = instantiate(name)
    tr = integrate(e.system, e.ic, e.t_end)
    assert not tr.singular
    for f in e.fis:
        assert monitor_fi(tr, f.expr, e.system, f.name).max_rel <= e.drift_tol, f.name


def test_drift_decreases_with_tighter_rtol():
    e = instantiate("evans-e3")
    f = e.fi("I2")
    d = [monitor_fi(integrate(e.system, e.ic, e.t_end, rtol=r, atol=r * 1e-2), f.expr, e.system).max_rel
         for r in (1e-6, 1e-8)]
    assert d[1] < d[0]


def test_fi_evaluation_error():
    tr = integrate(HARMONIC, State(0, (1, 0), (0, 1)), 1.0)
    with pytest.raises(FIEvaluationError):
        monitor_fi(tr, parse("1/y", XY), HARMONIC)


def test_drift_series_summary():
    tr = integrate(HARMONIC, State(0, (1, 0), (0, 1)), 1.0)
    d = monitor_fi(tr, ENERGY, HARMONIC, "E").to_dict()
    assert d["name"] == "E" and d["initial"] == pytest.approx(1.0)
    assert tr.metadata()["method"] == "RK45" and tr.metadata()["samples"] == len(tr)
