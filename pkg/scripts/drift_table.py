"""Drift of every catalog first integral on its reference trajectory.

Prints one row per (entry, FI) with the oracle verdict and the maximum
relative drift at several RK45 tolerances.

    python3 scripts/drift_table.py [--rtol 1e-8 1e-10 1e-12]
"""
import argparse
import time

from firstint.catalog import instantiate, list_catalog
from firstint.conditions import total_derivative_oracle
from firstint.dynamics import integrate, monitor_fi


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rtol", type=float, nargs="+", default=[1e-8, 1e-10, 1e-12])
    args = ap.parse_args()

    head = f"{'entry':28s} {'FI':4s} {'oracle':13s} " + " ".join(f"rtol={r:<8.0e}" for r in args.rtol)
    print(head)
    print("-" * len(head))
    for name in list_catalog():
        e = instantiate(name)
        t0 = time.perf_counter()
        trajs = [integrate(e.system, e.ic, e.t_end, rtol=r, atol=r * 1e-2) for r in args.rtol]
        for f in e.fis:
            verdict = total_derivative_oracle(f.expr, e.system).verdict
            drifts = [monitor_fi(tr, f.expr, e.system, f.name).max_rel for tr in trajs]
            print(f"{name:28s} {f.name:4s} {verdict:13s} " + " ".join(f"{d:<13.2e}" for d in drifts))
        print(f"{'':28s} t_end={e.t_end}, tolerance {e.drift_tol:g}, {time.perf_counter() - t0:.2f}s")


if __name__ == "__main__":
    main()
