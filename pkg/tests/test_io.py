from fractions import Fraction

import pytest

from firstint.catalog import instantiate, list_catalog
from firstint.conditions import check_integral1, check_integral2
from firstint.dynamics import State, rhs
from firstint.expr import ParseError, evaluate, to_string
from firstint.io import (
    ConfigError, dump_candidate, dump_system, exact_number, load_candidate, load_system,
)


@pytest.mark.parametrize("name", list_catalog())
def test_system_round_trip(name, tmp_path):
    e = instantiate(name)
    path = tmp_path / "sys.toml"
    path.write_text(dump_system(e.system))
    back = load_system(path)
    assert back.coords == e.system.coords and back.params == e.system.params
    s = e.ic
    assert list(rhs(back, s)) == pytest.approx(list(rhs(e.system, s)), rel=1e-13)
    assert dump_system(back) == dump_system(e.system)


def test_round_trip_keeps_exact_params():
    sys = load_system('[system]\ncoords = ["u", "w"]\n[params]\nbeta = "1/3"\ngamma = 0.25\n')
    assert sys.params == {"beta": Fraction(1, 3), "gamma": Fraction(1, 4)}
    assert exact_number("0.1") == Fraction(1, 10)


@pytest.mark.parametrize("name", ["beta-system", "evans-e3", "gravel-cubic"])
def test_candidate_round_trip(name):
    e = instantiate(name)
    for f in e.fis:
        c = f.candidate
        back = load_candidate(dump_candidate(c), e.system)
        check = check_integral1 if f.kind == "poly" else check_integral2
        a, b = check(c, e.system), check(back, e.system)
        assert [(r.id, r.verdict) for r in a.rows] == [(r.id, r.verdict) for r in b.rows]
        assert dump_candidate(back) == dump_candidate(c)


def test_one_based_indices_in_files():
    sys = load_system('[system]\ncoords = ["x", "y"]\n[connection]\n"2,1,2" = "x"\n[forces]\n2 = "y"\n')
    assert to_string(sys.connection.gamma(1, 0, 1)) == "x"
    assert to_string(sys.connection.gamma(1, 1, 0)) == "x"
    assert evaluate(sys.forces[1], {"x": 0, "y": 3.0}) == 3.0
    assert sys.forces[0].is_zero


BAD_SYSTEMS = [
    "not toml = = =",
    "[params]\nk = 1\n",
    '[system]\ncoords = ["x", "y"]\ndim = 3\n',
    '[system]\ncoords = ["x"]\n[connection]\n"1,1" = "x"\n',
    '[system]\ncoords = ["x"]\n[connection]\n"1,1,2" = "x"\n',
    '[system]\ncoords = ["x"]\n[connection]\n"a,b,c" = "x"\n',
    '[system]\ncoords = ["x"]\n[forces]\n1 = [3]\n',
    '[system]\ncoords = ["x"]\n[domain]\nx = [1, 0]\n',
    '[system]\ncoords = ["x"]\n[params]\nk = true\n',
    '[system]\ncoords = ["x"]\n[functions.F]\narg = "x"\n',
    '[system]\ncoords = ["x"]\n[functions.F]\narg = "x"\nrelation = "exp(F)"\nseed = "0"\n',
]


@pytest.mark.parametrize("text", BAD_SYSTEMS)
def test_load_system_errors(text):
    with pytest.raises(ConfigError):
        load_system(text)


def test_bad_expression_reports_position():
    with pytest.raises(ParseError, match="position 3"):
        load_system('[system]\ncoords = ["x"]\n[forces]\n1 = "x +"\n')


def test_missing_file():
    with pytest.raises(ConfigError):
        load_system("/nonexistent/system.toml")


BAD_CANDIDATES = [
    '[scalar]\nG = "0"\n',
    '[candidate]\nkind = "poly"\n',
    '[candidate]\nkind = "spline"\nm = 1\n',
    '[candidate]\nkind = "exp"\nm = 1\n',
    '[candidate]\nkind = "exp"\nm = 1\nlambda = "1"\n[tensor.1.1]\n1 = "x"\n',
    '[candidate]\nm = 2\n[tensor.0.2]\n"2,1" = "x"\n',
    '[candidate]\nm = 1\n[tensor.0.2]\n"1,1" = "x"\n',
    '[candidate]\nm = 1\n[tensor.a.1]\n1 = "x"\n',
]


@pytest.mark.parametrize("text", BAD_CANDIDATES)
def test_load_candidate_errors(text):
    sys = load_system('[system]\ncoords = ["x", "y"]\n')
    with pytest.raises(ConfigError):
        load_candidate(text, sys)


def test_state_from_file_ic():
    assert State.from_list([1, "0.5", 0, 0]).q == (1.0, 0.5)
