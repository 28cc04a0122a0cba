"""Command-line interface.

Exit codes: 0 pass, 1 verification failure, 2 input error, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import csv
import io as _io
import json
import os
import sys as _sys
from dataclasses import dataclass, field
from pathlib import Path

from . import catalog
from .conditions import (
    ExpTimeCandidate, check_complete_form, check_integral1, check_integral2, total_derivative_oracle,
)
from .dynamics import DynamicsError, State, StepUnderflowError, integrate, monitor_fi
from .expr import EvalError, IndeterminateError, ParseError, parse, to_string
from .expr.implicit import BranchCollisionError, NoRealRootError
from .geometry import SystemDef, classify_2d, curvature
from .io import ConfigError, dump_system, exact_number, load_candidate, load_system, tensor_to_dict
from .solver import SizeCapExceeded, find_generalized_kts

CONFIG_ENV = "FIRSTINT_CONFIG_DIR"
EXIT_PASS, EXIT_FAIL, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3


class InputError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    system: str | None = None
    candidate: str | None = None
    params: dict[str, str] = field(default_factory=dict)
    order: int | None = None
    degree: int | None = None
    parity: int | None = None
    ic: list[float] | None = None
    t_end: float | None = None
    rtol: float = 1e-10
    atol: float = 1e-12
    seed: int = 0
    out: str | None = None
    fmt: str = "json"
    extra_fis: list[tuple[str, str]] = field(default_factory=list)
    entry: str | None = None

    @classmethod
    def from_args(cls, ns: argparse.Namespace) -> "RunConfig":
        params = {}
        for item in ns.param or []:
            if "=" not in item:
                raise InputError(f"--param expects NAME=VALUE, got {item!r}")
            k, v = item.split("=", 1)
            params[k.strip()] = v.strip()
        fis = []
        for item in getattr(ns, "fi", None) or []:
            if "=" not in item:
                raise InputError(f"--fi expects NAME=EXPR, got {item!r}")
            k, v = item.split("=", 1)
            fis.append((k.strip(), v.strip()))
        ic = None
        if getattr(ns, "ic", None):
            try:
                ic = [float(s) for s in ns.ic.replace(",", " ").split()]
            except ValueError:
                raise InputError(f"--ic expects numbers, got {ns.ic!r}") from None
        return cls(
            command=ns.command, system=getattr(ns, "system", None), candidate=getattr(ns, "candidate", None),
            params=params, order=getattr(ns, "order", None), degree=getattr(ns, "degree", None),
            parity=getattr(ns, "parity", None), ic=ic, t_end=getattr(ns, "t_end", None),
            rtol=ns.rtol, atol=ns.atol, seed=ns.seed, out=ns.out, fmt=ns.format, extra_fis=fis,
            entry=getattr(ns, "entry", None),
        )


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def _resolve(path: str) -> Path:
    p = Path(path)
    if not p.is_absolute() and not p.exists() and os.environ.get(CONFIG_ENV):
        alt = Path(os.environ[CONFIG_ENV]) / p
        if alt.exists():
            return alt
    return p


def _system_and_entry(cfg: RunConfig) -> tuple[SystemDef, catalog.CatalogEntry | None]:
    if not cfg.system:
        raise InputError("--system is required")
    if cfg.system in catalog.list_catalog():
        try:
            entry = catalog.instantiate(cfg.system, cfg.params)
        except ValueError as exc:
            raise InputError(str(exc)) from None
        return entry.system, entry
    path = _resolve(cfg.system)
    if not path.exists():
        raise InputError(f"--system {cfg.system!r} is neither a catalog entry nor a file")
    sys = load_system(path)
    if cfg.params:
        unknown = set(cfg.params) - set(sys.params)
        if unknown:
            raise InputError(f"unknown parameters {sorted(unknown)}")
        sys = sys.with_params(**{k: exact_number(v) for k, v in cfg.params.items()})
    return sys, None


def _emit(cfg: RunConfig, text: str, stdout) -> None:
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _num(x: float) -> str:
    return repr(float(x))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_list(cfg: RunConfig, stdout) -> int:
    for name in catalog.list_catalog():
        stdout.write(name + "\n")
    return EXIT_PASS


def cmd_show(cfg: RunConfig, stdout) -> int:
    name = cfg.entry or cfg.system
    if name not in catalog.list_catalog():
        raise InputError(f"unknown catalog entry {name!r}")
    try:
        entry = catalog.instantiate(name, cfg.params)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    _emit(cfg, dump_system(entry.system), stdout)
    return EXIT_PASS


def cmd_check_conditions(cfg: RunConfig, stdout) -> int:
    sys, _ = _system_and_entry(cfg)
    if not cfg.candidate:
        raise InputError("--candidate is required")
    path = _resolve(cfg.candidate)
    cand = load_candidate(path, sys)
    if isinstance(cand, ExpTimeCandidate):
        report = check_integral2(cand, sys, seed=cfg.seed)
    elif cfg.parity is not None:
        report = check_complete_form(cand, cfg.parity, sys, seed=cfg.seed)
    else:
        report = check_integral1(cand, sys, seed=cfg.seed)
    _emit(cfg, _json(report.to_dict()), stdout)
    return EXIT_PASS if report.passed else EXIT_FAIL


def _trajectory(cfg: RunConfig, sys: SystemDef, entry):
    if cfg.ic is not None:
        s0 = State.from_list(cfg.ic)
        if len(s0.q) != sys.dim:
            raise InputError(f"--ic needs {2 * sys.dim} numbers")
    elif entry is not None:
        s0 = entry.ic
    else:
        raise InputError("--ic is required for systems loaded from files")
    t_end = cfg.t_end if cfg.t_end is not None else (entry.t_end if entry else None)
    if t_end is None:
        raise InputError("--t-end is required for systems loaded from files")
    try:
        traj = integrate(sys, s0, t_end, rtol=cfg.rtol, atol=cfg.atol)
    except StepUnderflowError as exc:
        traj = exc.trajectory
        if traj is None or len(traj) < 2:
            raise
        traj.singular = True
        traj.message = str(exc)
    reached = float(traj.t[-1]) - s0.t
    if traj.singular and reached < 0.1 * (t_end - s0.t):
        raise DynamicsError(f"singularity before 10% of the time span (t={traj.t[-1]:.6g}): {traj.message}")
    return traj, t_end


def _csv(sys: SystemDef, traj, columns: dict[str, object]) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    D = sys.dim
    w.writerow(["t"] + [f"q{i + 1}" for i in range(D)] + [f"v{i + 1}" for i in range(D)] + list(columns))
    for i in range(len(traj)):
        row = [_num(traj.t[i])] + [_num(x) for x in traj.q[i]] + [_num(x) for x in traj.v[i]]
        row += [_num(col[i]) for col in columns.values()]
        w.writerow(row)
    return buf.getvalue()


def cmd_simulate(cfg: RunConfig, stdout) -> int:
    sys, entry = _system_and_entry(cfg)
    traj, t_end = _trajectory(cfg, sys, entry)
    if cfg.fmt == "json":
        text = _json({"schema": 1, "metadata": traj.metadata(), "t": traj.t.tolist(),
                      "q": traj.q.tolist(), "v": traj.v.tolist()})
    else:
        text = _csv(sys, traj, {})
    _emit(cfg, text, stdout)
    return EXIT_PASS


def cmd_verify_fi(cfg: RunConfig, stdout) -> int:
    sys, entry = _system_and_entry(cfg)
    fis = []
    if entry is not None:
        fis += [(f.name, f.expr, f.conserved) for f in entry.fis]
    names = [*sys.coords, *sys.velocities, "t"]
    for name, text in cfg.extra_fis:
        fis.append((name, parse(text, names, list(sys.params), sys.functions), True))
    if not fis:
        raise InputError("no first integrals: use a catalog system or --fi NAME=EXPR")
    tol = entry.drift_tol if entry is not None else 1e-8
    traj, t_end = _trajectory(cfg, sys, entry)
    columns, rows, ok = {}, [], True
    for name, expr, expected in fis:
        oracle = total_derivative_oracle(expr, sys, seed=cfg.seed)
        drift = monitor_fi(traj, expr, sys, name)
        within = drift.max_rel <= tol
        conserved = oracle.conserved and within
        if expected and not conserved:
            ok = False
        columns[name] = drift.values
        rows.append({**drift.to_dict(), "oracle": oracle.verdict, "within_tolerance": within,
                     "conserved": conserved, "expected_conserved": expected})
    summary = {"schema": 1, "system": sys.name, "tolerance": tol, "t_end": t_end,
               "t_reached": float(traj.t[-1]), "truncated": bool(traj.singular),
               "trajectory": traj.metadata(), "fis": rows, "verdict": "pass" if ok else "fail"}
    if cfg.out:
        Path(cfg.out).write_text(_csv(sys, traj, columns))
    stdout.write(_json(summary))
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_classify(cfg: RunConfig, stdout) -> int:
    sys, _ = _system_and_entry(cfg)
    b = sys.bound()
    result = classify_2d(b.connection, box={c: b.domain[c] for c in b.coords}, singular=b.singular, seed=cfg.seed)
    _emit(cfg, _json({"schema": 1, "system": sys.name, **result.summary()}), stdout)
    return EXIT_FAIL if result.kind == "Indeterminate" else EXIT_PASS


def cmd_find_kt(cfg: RunConfig, stdout) -> int:
    sys, _ = _system_and_entry(cfg)
    if cfg.order is None or cfg.degree is None:
        raise InputError("find-kt needs --order and --degree")
    try:
        basis = find_generalized_kts(sys.bound().connection, cfg.order, cfg.degree)
    except SizeCapExceeded as exc:
        raise InputError(str(exc)) from None
    if cfg.fmt == "json":
        text = _json({"schema": 1, "system": sys.name, "order": cfg.order, "degree": cfg.degree,
                      "dimension": len(basis), "basis": [tensor_to_dict(T) for T in basis]})
    else:
        lines = [f"# order {cfg.order}, degree {cfg.degree}: basis dimension {len(basis)}"]
        if not basis:
            lines.append("# empty basis: no polynomial generalized Killing tensors at this degree")
        for i, T in enumerate(basis):
            lines.append(f"[basis.{i + 1}]")
            lines += [f'"{k}" = "{v}"' for k, v in tensor_to_dict(T).items()]
        text = "\n".join(lines) + "\n"
    _emit(cfg, text, stdout)
    return EXIT_PASS


def cmd_curvature(cfg: RunConfig, stdout) -> int:
    sys, _ = _system_and_entry(cfg)
    R = curvature(sys.bound().connection)
    nonzero = {}
    for (a, b, c, d), v in R.nonzero_items():
        if c < d and not sys.zero_test(v, seed=cfg.seed).is_zero:
            nonzero[f"{a + 1},{b + 1},{c + 1},{d + 1}"] = to_string(v)
    out = {"schema": 1, "system": sys.name, "nonzero": nonzero}
    if not nonzero:
        out["message"] = "all components zero"
    _emit(cfg, _json(out), stdout)
    return EXIT_PASS


COMMANDS = {
    "list": cmd_list, "show": cmd_show, "check-conditions": cmd_check_conditions, "verify-fi": cmd_verify_fi,
    "simulate": cmd_simulate, "classify": cmd_classify, "find-kt": cmd_find_kt, "curvature": cmd_curvature,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="firstint", description="First integrals of autonomous dynamical systems")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--param", action="append", metavar="NAME=VALUE", help="override a parameter")
    common.add_argument("--rtol", type=float, default=1e-10)
    common.add_argument("--atol", type=float, default=1e-12)
    common.add_argument("--seed", type=int, default=0, help="seed of the quasi-random zero tests")
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--format", choices=("json", "csv", "text"), default=None)
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("list", parents=[common], help="list catalog entries")
    p = sub.add_parser("show", parents=[common], help="print a catalog entry as a system file")
    p.add_argument("entry")
    for name, help_ in (("check-conditions", "check a candidate's condition rows"),
                        ("verify-fi", "integrate and monitor first integrals"),
                        ("simulate", "integrate a trajectory"),
                        ("classify", "Riemannian or non-Riemannian (2d)"),
                        ("find-kt", "polynomial generalized Killing tensors"),
                        ("curvature", "nonzero curvature components")):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("--system", required=True, help="catalog name or system file")
        if name == "check-conditions":
            p.add_argument("--candidate", required=True)
            p.add_argument("--parity", type=int, choices=(1, 2), help="check a complete form of this class")
        if name in ("verify-fi", "simulate"):
            p.add_argument("--ic", help="q1..qD v1..vD")
            p.add_argument("--t-end", type=float, dest="t_end")
        if name == "verify-fi":
            p.add_argument("--fi", action="append", metavar="NAME=EXPR", help="extra first integral")
        if name == "find-kt":
            p.add_argument("--order", type=int, required=True)
            p.add_argument("--degree", type=int, required=True)
    return ap


def main(argv=None, stdout=None) -> int:
    stdout = stdout or _sys.stdout
    ap = build_parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_PASS
    if ns.format is None:
        ns.format = "csv" if ns.command == "simulate" else ("text" if ns.command == "find-kt" else "json")
    try:
        cfg = RunConfig.from_args(ns)
        return COMMANDS[cfg.command](cfg, stdout)
    except (InputError, ConfigError, ParseError, FileNotFoundError, KeyError) as exc:
        _sys.stderr.write(f"input error: {exc}\n")
        return EXIT_INPUT
    except (DynamicsError, EvalError, IndeterminateError, NoRealRootError, BranchCollisionError,
            ArithmeticError) as exc:
        _sys.stderr.write(f"numeric failure: {exc}\n")
        return EXIT_NUMERIC
    except ValueError as exc:
        _sys.stderr.write(f"input error: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    raise SystemExit(main())
