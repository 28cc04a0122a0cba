"""Fold of the seed branch of F(x) for small k1, and the reference path.

For k1 != 0 the branch through c1 x^2/9 meets a neighbouring root at some
x_f and turns complex; trajectories must keep x > x_f.

    python3 scripts/gravel_fold.py [--k1 0.001 0.01 0.05]
"""
import argparse

import numpy as np

from firstint.catalog import gravel_function, instantiate
from firstint.dynamics import integrate, monitor_fi
from firstint.expr.implicit import BranchCollisionError


def fold(k1: float, x0: float = 2.0, h: float = 1e-4) -> float | None:
    tr = gravel_function({"c1": 1, "k1": k1}).tracker(x0)
    for x in np.arange(x0, 0.0, -h):
        try:
            tr([x])
        except BranchCollisionError:
            return float(x)
    return None


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k1", type=float, nargs="+", default=[0.001, 0.01, 0.05])
    args = ap.parse_args()
    for k1 in args.k1:
        e = instantiate("gravel-cubic", {"k1": k1})
        xf = fold(k1)
        tr = integrate(e.system, e.ic, e.t_end)
        drift = monitor_fi(tr, e.fi("I3").expr, e.system).max_rel
        print(f"k1={k1:<6g} fold near x={xf if xf is None else round(xf, 4)}  "
              f"reference path x in [{tr.q[:, 0].min():.3f}, {tr.q[:, 0].max():.3f}]  I3 drift {drift:.2e}")


if __name__ == "__main__":
    main()
