"""Where the stated initial data of the oscillator and beta checks stop.

Both equations are integrated twice: with firstint (RK45) and with a
plain transcription handed to scipy's DOP853 at tight tolerance.  The
two must agree on the stopping time; the FI drift up to that time is
reported as well.

    python3 scripts/singular_spans.py
"""
from scipy.integrate import solve_ivp

from firstint.catalog import instantiate
from firstint.dynamics import State, StepUnderflowError, integrate, monitor_fi


def ours(entry, s0, t_end):
    try:
        tr = integrate(entry.system, s0, t_end)
        why = tr.message
    except StepUnderflowError as exc:
        tr, why = exc.trajectory, str(exc)
    drift = monitor_fi(tr, entry.fis[0].expr, entry.system).max_rel
    return float(tr.t[-1]), why, drift, tr.final


def oscillator(t, y):
    x, yy, xd, yd = y
    return [xd, yd, -xd * xd / (2 * yy + x) - (2 * x - yy), -yd * yd / (yy - 2 * x) - (2 * yy + x)]


def beta(t, y, b=0.5):
    u, w, ud, wd = y
    a, c = -8 * b * w / u**3, 4 * b / u**2
    return [ud, wd, -(a * ud * ud + 2 * c * ud * wd) - 1 / u**2,
            -(2 * a * ud * wd + c * wd * wd) + 2 * w / u**3]


def locus(t, y):
    return (2 * y[1] + y[0]) * (y[1] - 2 * y[0])


locus.terminal = True


def main():
    cases = [
        ("coupled-oscillators-nr", {"k": 2, "p": 1}, (1.0, 0.5, 0.1, -0.2), 10.0, oscillator, [locus]),
        ("beta-system", {"beta": "0.5"}, (1.0, 0.1, 0.3, -0.2), 5.0, beta, None),
    ]
    for name, pr, ic, t_end, f, events in cases:
        e = instantiate(name, pr)
        t_stop, why, drift, final = ours(e, State.from_list(ic), t_end)
        ref = solve_ivp(f, (0, t_end), ic, method="DOP853", rtol=1e-13, atol=1e-14, events=events)
        print(name, "IC", ic, "requested span", t_end)
        print(f"  firstint RK45 last sample t={t_stop:.6f}: {why}")
        print(f"  state there q={tuple(round(float(x), 6) for x in final.q)} v={tuple(f'{x:.3e}' for x in final.v)}")
        print(f"  FI drift up to the stop: {drift:.2e}")
        print(f"  DOP853 reference stops at t={ref.t[-1]:.6f} (status {ref.status})")
        if name.startswith("coupled"):
            x, y = ref.y[0, -1], ref.y[1, -1]
            print(f"  L1 = x + 2y = {x + 2 * y:.2e}, L2 = y - 2x = {y - 2 * x:.3f}")


if __name__ == "__main__":
    main()
