import io
import json

import pytest

from firstint.catalog import instantiate
from firstint.cli import main
from firstint.io import dump_candidate, dump_system

FLAT = '[system]\nname = "plane"\ncoords = ["x", "y"]\n[forces]\n1 = "x"\n2 = "y"\n'
IDENTITY_KT = '[candidate]\nm = 2\n[tensor.0.2]\n"1,1" = "1"\n"2,2" = "1"\n'


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), stdout=out)
    return code, out.getvalue()


@pytest.fixture
def files(tmp_path):
    def write(name, text):
        p = tmp_path / name
        p.write_text(text)
        return str(p)
    return write


def test_list_and_show():
    code, out = run("list")
    assert code == 0 and "beta-system" in out.split()
    code, out = run("show", "evans-e3")
    assert code == 0 and "[system]" in out and 'name = "evans-e3"' in out


def test_check_conditions_beta_qfi_passes(files):
    c = files("qfi.toml", dump_candidate(instantiate("beta-system").fi("QFI").candidate))
    code, out = run("check-conditions", "--system", "beta-system", "--candidate", c)
    rep = json.loads(out)
    assert code == 0 and rep["verdict"] == "pass"
    assert [r["id"] for r in rep["rows"]] == ["kt[N=0]", "kt-lower", "s0", "G-gradient"]


def test_empty_candidate_passes_vacuously(files):
    c = files("empty.toml", "[candidate]\nm = 2\n")
    assert run("check-conditions", "--system", "beta-system", "--candidate", c)[0] == 0


def test_identity_kt_on_beta_fails_with_named_row(files):
    c = files("ident.toml", IDENTITY_KT)
    code, out = run("check-conditions", "--system", "beta-system", "--candidate", c)
    rep = json.loads(out)
    assert code == 1 and rep["verdict"] == "fail"
    failing = [r for r in rep["rows"] if r["verdict"] == "NonZero"]
    assert failing[0]["id"] == "kt[N=0]" and failing[0]["witness"]


def test_output_is_byte_identical_across_runs(files):
    c = files("ident.toml", IDENTITY_KT)
    args = ("check-conditions", "--system", "beta-system", "--candidate", c, "--seed", "3")
    assert run(*args) == run(*args)
    args = ("verify-fi", "--system", "coupled-oscillators-nr")
    assert run(*args) == run(*args)


def test_verify_fi_evans_all_conserved():
    code, out = run("verify-fi", "--system", "evans-e3")
    rep = json.loads(out)
    assert code == 0 and rep["verdict"] == "pass"
    assert [f["name"] for f in rep["fis"]] == ["I1", "I2", "I3", "I4", "I5"]
    assert all(f["conserved"] for f in rep["fis"])


def test_verify_fi_gravel_oscillator_limit():
    code, out = run("verify-fi", "--system", "gravel-cubic", "--param", "k1=0", "--param", "k2=0", "--param", "k3=0")
    assert code == 0, out


def test_verify_fi_negative_control(files, tmp_path):
    sysfile = files("plane.toml", FLAT)
    csv_path = tmp_path / "drift.csv"
    code, out = run("verify-fi", "--system", sysfile, "--ic", "1 0 0 1", "--t-end", "3",
                    "--fi", "E=(xdot^2 + ydot^2 + x^2 + y^2)/2", "--fi", "P=xdot", "--out", str(csv_path))
    rep = json.loads(out)
    assert code == 1 and rep["verdict"] == "fail"
    verdicts = {f["name"]: f["conserved"] for f in rep["fis"]}
    assert verdicts == {"E": True, "P": False}
    header = csv_path.read_text().splitlines()[0]
    assert header == "t,q1,q2,v1,v2,E,P"


def test_simulate_csv(files):
    sysfile = files("plane.toml", FLAT)
    code, out = run("simulate", "--system", sysfile, "--ic", "1,0,0,1", "--t-end", "1", "--format", "csv")
    lines = out.splitlines()
    assert code == 0 and lines[0] == "t,q1,q2,v1,v2" and len(lines) >= 201


def test_input_errors_exit_2(files):
    assert run("check-conditions", "--system", "nowhere.toml", "--candidate", "c.toml")[0] == 2
    assert run("show", "kepler")[0] == 2
    assert run("verify-fi", "--system", "beta-system", "--param", "beta=0")[0] == 2
    assert run("bogus-command")[0] == 2
    bad = files("bad.toml", "[system]\ncoords = [\"x\"]\n[forces]\n1 = \"x +\"\n")
    assert run("curvature", "--system", bad)[0] == 2
    sysfile = files("plane.toml", FLAT)
    assert run("simulate", "--system", sysfile, "--t-end", "1")[0] == 2
    assert run("find-kt", "--system", "beta-system", "--order", "2", "--degree", "9")[0] == 2


def test_early_singularity_exits_3():
    # u'' = -1/u^2 from u = 0.01 falls into u = 0 almost at once
    code, _ = run("verify-fi", "--system", "beta-system", "--ic", "0.01 0 -1 0", "--t-end", "5")
    assert code == 3


def test_classify_oscillators_nonriemannian():
    code, out = run("classify", "--system", "coupled-oscillators-nr")
    rep = json.loads(out)
    assert code == 0 and rep["kind"] == "NonRiemannian" and rep["witness"]


def test_find_kt_beta_empty_basis():
    code, out = run("find-kt", "--system", "beta-system", "--order", "1", "--degree", "2", "--format", "text")
    assert code == 0 and "empty basis" in out
    code, out = run("find-kt", "--system", "beta-system", "--order", "1", "--degree", "2", "--format", "json")
    assert json.loads(out)["dimension"] == 0


def test_curvature_flat_file(files):
    code, out = run("curvature", "--system", files("plane.toml", FLAT))
    assert code == 0 and json.loads(out)["message"] == "all components zero"
    code, out = run("curvature", "--system", "beta-system")
    # one entry per independent component with c < d
    assert sorted(json.loads(out)["nonzero"]) == ["1,1,1,2", "2,1,1,2", "2,2,1,2"]


def test_show_round_trip_through_cli(files):
    path = files("osc.toml", run("show", "coupled-oscillators-nr")[1])
    assert open(path).read() == dump_system(instantiate("coupled-oscillators-nr").system)
    code, out = run("verify-fi", "--system", path, "--ic", "1 0.5 0.1 -0.2", "--t-end", "0.8",
                    "--fi", "I1=(2*y + x)*xdot + (y - 2*x)*ydot")
    assert code == 0, out


def test_config_dir_env(files, monkeypatch, tmp_path):
    files("plane.toml", FLAT)
    monkeypatch.setenv("FIRSTINT_CONFIG_DIR", str(tmp_path))
    monkeypatch.chdir("/")
    assert run("curvature", "--system", "plane.toml")[0] == 0
