"""Exact rational linear algebra: fraction-free elimination and nullspaces."""
from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import Sequence

import numpy as np


def _content_normalize(v: list[Fraction]) -> list[int]:
    den = 1
    for x in v:
        den = den * x.denominator // gcd(den, x.denominator)
    ints = [int(x * den) for x in v]
    g = 0
    for x in ints:
        g = gcd(g, x)
    if g == 0:
        return ints
    ints = [x // g for x in ints]
    for x in ints:
        if x:
            if x < 0:
                ints = [-y for y in ints]
            break
    return ints


def rref(rows: Sequence[dict[int, int]], ncols: int) -> tuple[list[dict[int, int]], list[int]]:
    """Fraction-free Gauss-Jordan on sparse integer rows.

    Rows are dicts column -> nonzero int.  Returns (reduced rows, pivot
    columns); each reduced row has its pivot as its smallest column and no
    other reduced row has an entry in that column.
    """
    pivots: dict[int, dict[int, int]] = {}
    for row in rows:
        r = {c: int(v) for c, v in row.items() if v}
        # eliminate against existing pivots
        while r:
            c = min(r)
            if c not in pivots:
                break
            p = pivots[c]
            a, b = r[c], p[c]
            g = gcd(a, b)
            fa, fb = b // g, a // g
            new = {k: v * fa for k, v in r.items()}
            for k, v in p.items():
                nv = new.get(k, 0) - v * fb
                if nv:
                    new[k] = nv
                else:
                    new.pop(k, None)
            r = _primitive(new)
        if not r:
            continue
        c = min(r)
        r = _primitive(r)
        if r[c] < 0:
            r = {k: -v for k, v in r.items()}
        pivots[c] = r
    # back substitution (Jordan step), highest pivots first
    order = sorted(pivots, reverse=True)
    for c in order:
        p = pivots[c]
        for c2 in sorted(pivots):
            if c2 >= c:
                break
            q = pivots[c2]
            if c not in q:
                continue
            a, b = q[c], p[c]
            g = gcd(a, b)
            fa, fb = b // g, a // g
            new = {k: v * fa for k, v in q.items()}
            for k, v in p.items():
                nv = new.get(k, 0) - v * fb
                if nv:
                    new[k] = nv
                else:
                    new.pop(k, None)
            new = _primitive(new)
            if new[c2] < 0:
                new = {k: -v for k, v in new.items()}
            pivots[c2] = new
    cols = sorted(pivots)
    return [pivots[c] for c in cols], cols


def _primitive(r: dict[int, int]) -> dict[int, int]:
    g = 0
    for v in r.values():
        g = gcd(g, v)
        if g == 1:
            return r
    if g <= 1:
        return r
    return {k: v // g for k, v in r.items()}


def to_integer_rows(rows: Sequence[dict[int, Fraction]]) -> list[dict[int, int]]:
    out = []
    for row in rows:
        den = 1
        for v in row.values():
            v = Fraction(v)
            den = den * v.denominator // gcd(den, v.denominator)
        out.append({c: int(Fraction(v) * den) for c, v in row.items() if v})
    return out


def nullspace(rows: Sequence[dict[int, Fraction]] | Sequence[Sequence], ncols: int | None = None) -> list[list[int]]:
    """Integer basis of the right nullspace; vectors have content 1 and positive leading entry."""
    rows = _as_sparse(rows)
    if ncols is None:
        ncols = 1 + max((c for r in rows for c in r), default=-1)
    red, piv = rref(to_integer_rows(rows), ncols)
    pivset = set(piv)
    basis = []
    for free in range(ncols):
        if free in pivset:
            continue
        v = [Fraction(0)] * ncols
        v[free] = Fraction(1)
        for r, pc in zip(red, piv):
            if free in r:
                v[pc] = Fraction(-r[free], r[pc])
        basis.append(_content_normalize(v))
    return basis


def solve(rows: Sequence[dict[int, Fraction]], rhs: Sequence[Fraction], ncols: int) -> list[Fraction] | None:
    """One exact solution of A x = b (free variables set to zero), or None."""
    aug = []
    for r, b in zip(_as_sparse(rows), rhs):
        r = dict(r)
        if b:
            r[ncols] = Fraction(b)
        aug.append(r)
    red, piv = rref(to_integer_rows(aug), ncols + 1)
    if ncols in piv:
        return None
    x = [Fraction(0)] * ncols
    for r, pc in zip(red, piv):
        x[pc] = Fraction(r.get(ncols, 0), r[pc])
    return x


def exact_rank(rows, ncols: int | None = None) -> int:
    rows = _as_sparse(rows)
    if ncols is None:
        ncols = 1 + max((c for r in rows for c in r), default=-1)
    return len(rref(to_integer_rows(rows), ncols)[1])


def float_rank(rows, ncols: int, tol: float = 1e-8) -> int:
    """SVD rank with rows normalized and a threshold relative to the largest singular value."""
    rows = _as_sparse(rows)
    if not rows or ncols == 0:
        return 0
    A = np.zeros((len(rows), ncols))
    for i, r in enumerate(rows):
        for c, v in r.items():
            A[i, c] = float(v)
    norms = np.linalg.norm(A, axis=1)
    A = A[norms > 0] / norms[norms > 0, None]
    if A.size == 0:
        return 0
    s = np.linalg.svd(A, compute_uv=False)
    return int(np.sum(s > tol * s[0]))


def _as_sparse(rows) -> list[dict[int, Fraction]]:
    out = []
    for r in rows:
        if isinstance(r, dict):
            out.append({c: Fraction(v) for c, v in r.items() if v})
        else:
            out.append({c: Fraction(v) for c, v in enumerate(r) if v})
    return out
