"""TOML file forms of systems and first-integral candidates.

Indices are 1-based in files and 0-based in memory.  Expressions use the
infix grammar of ``firstint.expr.parse``.
"""
from __future__ import annotations

from fractions import Fraction
from pathlib import Path

import tomli
import tomli_w

from .conditions import ExpTimeCandidate, PolyTimeCandidate
from .expr import Const, Expr, parse, substitute, to_string
from .expr.implicit import ImplicitFunction
from .geometry import Connection, SystemDef
from .tensor import SymTensorField


class ConfigError(ValueError):
    pass


def exact_number(value) -> Fraction | float:
    """Parameter values are kept exact where their decimal text allows."""
    if isinstance(value, bool):
        raise ConfigError(f"boolean is not a number: {value}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    try:
        return Fraction(str(value))
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"not a number: {value!r}") from None


def _indices(key: str, dim: int, arity: int | None = None) -> tuple[int, ...]:
    try:
        idx = tuple(int(s) - 1 for s in key.split(",")) if key.strip() else ()
    except ValueError:
        raise ConfigError(f"bad index key {key!r}") from None
    if arity is not None and len(idx) != arity:
        raise ConfigError(f"index key {key!r} needs {arity} indices")
    if any(not 0 <= i < dim for i in idx):
        raise ConfigError(f"index out of range in {key!r} (dimension {dim})")
    return idx


def _key(idx) -> str:
    return ",".join(str(i + 1) for i in idx)


def _expr_text(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return repr(v)
    raise ConfigError(f"expected an expression string, got {v!r}")


def _read(source) -> dict:
    if isinstance(source, dict):
        return source
    if isinstance(source, Path) or ("\n" not in source and "=" not in source):
        try:
            text = Path(source).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read {source}: {exc.strerror}") from None
    else:
        text = source
    try:
        return tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from None


# ---------------------------------------------------------------------------
# systems
# ---------------------------------------------------------------------------

def load_system(source) -> SystemDef:
    """SystemDef from a TOML path, TOML text or an already parsed dict."""
    doc = _read(source)
    try:
        head = doc["system"]
        coords = tuple(head["coords"])
    except (KeyError, TypeError):
        raise ConfigError("[system] needs coords") from None
    dim = int(head.get("dim", len(coords)))
    if dim != len(coords) or dim < 1:
        raise ConfigError(f"dim {dim} does not match coords {list(coords)}")
    params = {k: exact_number(v) for k, v in doc.get("params", {}).items()}
    names = list(params)

    functions: dict[str, ImplicitFunction] = {}
    for fname, spec in doc.get("functions", {}).items():
        try:
            arg, rel, seed = spec["arg"], spec["relation"], spec["seed"]
        except (KeyError, TypeError):
            raise ConfigError(f"[functions.{fname}] needs arg, relation, seed") from None
        sub = {k: Const(v) for k, v in params.items()}
        relation = substitute(parse(rel, [arg, fname], names), sub)
        seed_e = substitute(parse(_expr_text(seed), [arg], names), sub)
        try:
            functions[fname] = ImplicitFunction(fname, arg, fname, relation, seed_e)
        except ValueError as exc:
            raise ConfigError(f"[functions.{fname}]: {exc}") from None

    def P(text):
        return parse(_expr_text(text), coords, names, functions)

    comps = {}
    for key, text in doc.get("connection", {}).items():
        a, b, c = _indices(key, dim, 3)
        comps[(a, min(b, c), max(b, c))] = P(text)
    forces = [Const(0)] * dim
    for key, text in doc.get("forces", {}).items():
        (a,) = _indices(key, dim, 1)
        forces[a] = P(text)
    domain = {}
    for c, bounds in doc.get("domain", {}).items():
        if c not in coords or len(bounds) != 2 or not bounds[0] < bounds[1]:
            raise ConfigError(f"bad domain entry {c} = {bounds}")
        domain[c] = (float(bounds[0]), float(bounds[1]))
    singular = [P(s) for s in doc.get("singular", {}).get("exprs", [])]
    return SystemDef(
        name=head.get("name", "system"),
        connection=Connection(coords, comps),
        forces=forces,
        params=params,
        domain=domain,
        singular=singular,
        functions=dict(functions),
        description=head.get("description", ""),
    )


def _number_out(v):
    if isinstance(v, Fraction):
        return int(v) if v.denominator == 1 else str(v)
    return v


def system_to_dict(sys: SystemDef) -> dict:
    doc: dict = {"system": {"name": sys.name, "dim": sys.dim, "coords": list(sys.coords)}}
    if sys.description:
        doc["system"]["description"] = sys.description
    if sys.params:
        doc["params"] = {k: _number_out(v) for k, v in sys.params.items()}
    if sys.functions:
        doc["functions"] = {}
        for name, fn in sys.functions.items():
            doc["functions"][name] = {"arg": fn.arg, "relation": to_string(fn.relation), "seed": to_string(fn.seed)}
    doc["connection"] = {_key((a, b, c)): to_string(v) for (a, b, c), v in sys.connection.items()}
    doc["forces"] = {_key((a,)): to_string(f) for a, f in enumerate(sys.forces)}
    doc["domain"] = {c: list(sys.domain[c]) for c in sys.coords}
    if sys.singular:
        doc["singular"] = {"exprs": [to_string(s) for s in sys.singular]}
    return doc


def dump_system(sys: SystemDef) -> str:
    return tomli_w.dumps(system_to_dict(sys))


# ---------------------------------------------------------------------------
# tensors and candidates
# ---------------------------------------------------------------------------

def tensor_to_dict(T: SymTensorField) -> dict:
    return {_key(idx): to_string(v) for idx, v in T.nonzero_items()}


def tensor_from_dict(d: dict, dim: int, order: int, parse_fn) -> SymTensorField:
    comps = {}
    for key, text in d.items():
        idx = _indices(key, dim, order)
        if list(idx) != sorted(idx):
            raise ConfigError(f"tensor index key {key!r} must be sorted")
        comps[idx] = parse_fn(text)
    return SymTensorField(dim, order, comps)


def load_candidate(source, sys: SystemDef) -> PolyTimeCandidate | ExpTimeCandidate:
    doc = _read(source)
    head = doc.get("candidate")
    if not isinstance(head, dict):
        raise ConfigError("missing [candidate] table")
    kind = head.get("kind", "poly")
    try:
        m = int(head["m"])
    except (KeyError, ValueError, TypeError):
        raise ConfigError("[candidate] needs integer m") from None
    names = list(sys.params)
    D = sys.dim

    def P(text) -> Expr:
        return parse(_expr_text(text), sys.coords, names, sys.functions)

    blocks: dict[tuple[int, int], SymTensorField] = {}
    for N, by_rank in doc.get("tensor", {}).items():
        for r, comps in by_rank.items():
            try:
                key = (int(N), int(r))
            except ValueError:
                raise ConfigError(f"bad tensor block [tensor.{N}.{r}]") from None
            blocks[key] = tensor_from_dict(comps, D, key[1], P)
    scalar = doc.get("scalar", {})
    try:
        if kind == "poly":
            n = int(head.get("n", 0))
            s1 = P(scalar["s1"]) if "s1" in scalar else None
            return PolyTimeCandidate(D, m, n, blocks, P(scalar.get("G", "0")), P(scalar.get("s0", "0")), s1)
        if kind == "exp":
            if "lambda" not in head:
                raise ConfigError("exponential candidate needs lambda")
            if any(N != 0 for N, _ in blocks):
                raise ConfigError("exponential candidates use [tensor.0.r] blocks")
            return ExpTimeCandidate(D, m, P(head["lambda"]), {r: T for (_, r), T in blocks.items()})
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    raise ConfigError(f"unknown candidate kind {kind!r}")


def candidate_to_dict(c) -> dict:
    if isinstance(c, PolyTimeCandidate):
        doc: dict = {"candidate": {"kind": "poly", "m": c.m, "n": c.n}}
        tensors = {}
        for (N, r), T in sorted(c.tensors.items()):
            if not T.is_zero():
                tensors.setdefault(str(N), {})[str(r)] = tensor_to_dict(T)
        scalar = {"G": to_string(c.G), "s0": to_string(c.s0)}
        if c.s1 is not None:
            scalar["s1"] = to_string(c.s1)
        doc["scalar"] = scalar
    else:
        doc = {"candidate": {"kind": "exp", "m": c.m, "lambda": to_string(c.lam)}}
        tensors = {"0": {str(r): tensor_to_dict(T) for r, T in sorted(c.tensors.items()) if not T.is_zero()}}
    if tensors and any(tensors.values()):
        doc["tensor"] = tensors
    return doc


def dump_candidate(c) -> str:
    return tomli_w.dumps(candidate_to_dict(c))
