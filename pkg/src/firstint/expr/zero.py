"""Zero testing: exact on rational normal forms, sampled otherwise."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.stats import qmc

from .core import Expr
from .evaluate import EvalError, evaluate, magnitude
from .poly import BudgetExceeded, RationalBuilder

EXACT_ZERO = "ExactZero"
PROBABLY_ZERO = "ProbablyZero"
NON_ZERO = "NonZero"

N_SAMPLES = 64
THRESHOLD = 1e-10
SINGULAR_MARGIN = 1e-6


class IndeterminateError(ArithmeticError):
    """Every sample point hit a singularity."""


@dataclass(frozen=True)
class ZeroVerdict:
    kind: str
    witness: dict | None = None
    value: float | None = None
    checked: int = 0

    @property
    def is_zero(self) -> bool:
        return self.kind != NON_ZERO

    def __bool__(self):
        return self.is_zero


def exact_zero(e: Expr, budget: int | None = 4000) -> bool | None:
    """True if the rational normal form has a zero numerator.

    False when the numerator is nonzero (the expression may still vanish if
    it has algebraically dependent atoms), None when the budget ran out.
    """
    if e.is_zero:
        return True
    try:
        return RationalBuilder(budget=budget).convert(e).is_zero()
    except BudgetExceeded:
        return None
    except ZeroDivisionError:
        return None


def sample_points(box: Mapping[str, tuple[float, float]], n: int = N_SAMPLES, seed: int = 0) -> list[dict]:
    names = list(box)
    if not names:
        return [{}]
    lo = np.array([box[k][0] for k in names], dtype=float)
    hi = np.array([box[k][1] for k in names], dtype=float)
    if np.any(hi <= lo):
        raise ValueError("domain box must have positive volume")
    pts = qmc.Halton(d=len(names), scramble=True, seed=seed).random(n)
    pts = qmc.scale(pts, lo, hi)
    return [dict(zip(names, map(float, row))) for row in pts]


def sampled_zero(
    e: Expr,
    box: Mapping[str, tuple[float, float]],
    singular: Sequence[Expr] = (),
    fixed: Mapping[str, float] | None = None,
    n: int = N_SAMPLES,
    seed: int = 0,
    threshold: float = THRESHOLD,
) -> ZeroVerdict:
    checked = 0
    for point in sample_points(box, n, seed):
        if fixed:
            point.update(fixed)
        try:
            if any(abs(evaluate(s, point)) < SINGULAR_MARGIN for s in singular):
                continue
            value = evaluate(e, point)
            scale = magnitude(e, point)
        except EvalError:
            continue
        checked += 1
        if abs(value) > threshold * (1.0 + scale):
            return ZeroVerdict(NON_ZERO, witness=point, value=value, checked=checked)
    if checked == 0:
        raise IndeterminateError("all sample points hit singularities")
    return ZeroVerdict(PROBABLY_ZERO, checked=checked)


def is_identically_zero(
    e: Expr,
    box: Mapping[str, tuple[float, float]],
    singular: Sequence[Expr] = (),
    fixed: Mapping[str, float] | None = None,
    n: int = N_SAMPLES,
    seed: int = 0,
    exact: bool = True,
) -> ZeroVerdict:
    """Decide whether ``e`` vanishes on the box.

    ``box`` maps every free symbol not in ``fixed`` to an interval.
    """
    if exact and exact_zero(e):
        return ZeroVerdict(EXACT_ZERO)
    return sampled_zero(e, box, singular, fixed, n, seed)
