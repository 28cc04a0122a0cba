"""Numerical integration of q'' = -Gamma q' q' - Q and first-integral drift."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .expr import Expr, compile_exprs
from .geometry import SystemDef

SINGULAR_MARGIN = 1e-6
MIN_SAMPLES = 200
DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12


class DynamicsError(ArithmeticError):
    pass


class SingularityError(DynamicsError):
    pass


class StepUnderflowError(DynamicsError):
    """Adaptive step collapsed; ``trajectory`` holds the samples reached."""

    def __init__(self, message: str, trajectory: "Trajectory | None" = None):
        super().__init__(message)
        self.trajectory = trajectory


class FIEvaluationError(DynamicsError):
    pass


@dataclass(frozen=True)
class State:
    t: float
    q: tuple[float, ...]
    v: tuple[float, ...]

    def __post_init__(self):
        if len(self.q) != len(self.v):
            raise ValueError("q and v lengths differ")
        if not all(math.isfinite(x) for x in (self.t, *self.q, *self.v)):
            raise ValueError("state has non-finite entries")

    @classmethod
    def from_list(cls, values: Sequence[float], t: float = 0.0) -> "State":
        if len(values) % 2:
            raise ValueError("initial condition needs 2D numbers (q then v)")
        D = len(values) // 2
        return cls(float(t), tuple(map(float, values[:D])), tuple(map(float, values[D:])))


def _trackers(sys: SystemDef) -> dict:
    """Fresh branch trackers for the system's implicit functions."""
    out = {}
    for name, fn in sys.functions.items():
        if hasattr(fn, "tracker"):
            out[name] = fn.tracker()
    return out


class _Field:
    """Compiled accelerations and singular-locus functions of a bound system."""

    def __init__(self, sys: SystemDef, functions: dict | None = None):
        b = sys.bound()
        D = b.dim
        self.D = D
        coords = list(b.coords)
        pairs = [(bb, cc) for bb in range(D) for cc in range(bb, D)]
        gam = [b.connection.gamma(a, bb, cc) for a in range(D) for bb, cc in pairs]
        self.pairs = pairs
        self.functions = functions if functions is not None else _trackers(b)
        self._gamma = compile_exprs(gam + list(b.forces), coords, self.functions)
        self._singular = compile_exprs(b.singular, coords, self.functions) if b.singular else None

    def accel(self, q: Sequence[float], v: Sequence[float]) -> np.ndarray:
        try:
            vals = self._gamma(*q)
        except (ValueError, ArithmeticError) as exc:
            raise SingularityError(f"singular evaluation at q={list(q)}: {exc}") from None
        D, P = self.D, len(self.pairs)
        out = np.empty(D)
        for a in range(D):
            s = 0.0
            for j, (bb, cc) in enumerate(self.pairs):
                g = vals[a * P + j]
                if g:
                    s += g * v[bb] * v[cc] * (1.0 if bb == cc else 2.0)
            out[a] = -s - vals[D * P + a]
        if not np.all(np.isfinite(out)):
            raise SingularityError(f"non-finite acceleration at q={list(q)}")
        return out

    def singular_values(self, q) -> tuple[float, ...]:
        if self._singular is None:
            return ()
        try:
            return self._singular(*q)
        except (ZeroDivisionError, ValueError, OverflowError):
            return (0.0,)


def rhs(sys: SystemDef, s: State) -> np.ndarray:
    """Accelerations q''^a = -Gamma^a_bc v^b v^c - Q^a at the state."""
    if len(s.q) != sys.dim:
        raise ValueError("state dimension differs from system dimension")
    return _Field(sys).accel(s.q, s.v)


@dataclass
class Trajectory:
    t: np.ndarray
    q: np.ndarray
    v: np.ndarray
    method: str
    rtol: float | None = None
    atol: float | None = None
    h: float | None = None
    stats: dict = field(default_factory=dict)
    singular: bool = False
    message: str = ""

    def __len__(self):
        return len(self.t)

    def state(self, i: int) -> State:
        return State(float(self.t[i]), tuple(self.q[i]), tuple(self.v[i]))

    def states(self) -> list[State]:
        return [self.state(i) for i in range(len(self))]

    @property
    def final(self) -> State:
        return self.state(len(self) - 1)

    def metadata(self) -> dict:
        return {"method": self.method, "rtol": self.rtol, "atol": self.atol, "h": self.h,
                "samples": len(self), "singular": self.singular, "message": self.message, **self.stats}


def integrate(
    sys: SystemDef,
    s0: State,
    t_end: float,
    method: str = "RK45",
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    h: float | None = None,
    samples: int = MIN_SAMPLES,
    margin: float = SINGULAR_MARGIN,
) -> Trajectory:
    """Integrate from s0 to t_end with adaptive RK45 or fixed-step RK4.

    Stops early, with ``singular`` set, when a declared singular expression
    falls below ``margin`` in absolute value.
    """
    if t_end <= s0.t:
        raise ValueError("t_end must exceed the initial time")
    if len(s0.q) != sys.dim:
        raise ValueError(f"initial condition has dimension {len(s0.q)}, system has {sys.dim}")
    f = _Field(sys)
    D = sys.dim
    y0 = np.array(s0.q + s0.v, dtype=float)
    if any(abs(x) <= margin for x in f.singular_values(s0.q)):
        raise SingularityError(f"initial state lies on a singular locus: q={list(s0.q)}")

    def deriv(t, y):
        return np.concatenate([y[D:], f.accel(y[:D], y[D:])])

    method = method.upper()
    if method == "RK45":
        if rtol <= 0 or atol <= 0:
            raise ValueError("tolerances must be positive")
        events = []
        # signed, so a step that jumps clean across the locus still registers
        for i, v0 in enumerate(f.singular_values(s0.q)):
            def ev(t, y, i=i, side=math.copysign(margin, v0)):
                return f.singular_values(y[:D])[i] - side
            ev.terminal = True
            events.append(ev)
        t_eval = np.linspace(s0.t, t_end, max(samples, 2))
        sol = solve_ivp(deriv, (s0.t, t_end), y0, method="RK45", rtol=rtol, atol=atol,
                        t_eval=t_eval, events=events or None)
        if sol.status == -1:
            partial = Trajectory(sol.t, sol.y.T[:, :D].copy(), sol.y.T[:, D:].copy(), "RK45", rtol, atol,
                                 message=sol.message)
            t_fail = float(sol.t[-1]) if len(sol.t) else s0.t
            raise StepUnderflowError(f"{sol.message} (near t={t_fail:.6g})", partial)
        ts, ys = sol.t, sol.y.T
        singular = sol.status == 1
        if singular:
            te = float(sol.t_events[np.argmax([len(e) > 0 for e in sol.t_events])][0])
            ye = sol.y_events[np.argmax([len(e) > 0 for e in sol.t_events])][0]
            ts = np.append(ts[ts < te], te)
            ys = np.vstack([ys[: len(ts) - 1], ye])
        stats = {"nfev": int(sol.nfev), "status": int(sol.status)}
        return Trajectory(ts, ys[:, :D].copy(), ys[:, D:].copy(), "RK45", rtol, atol, None, stats,
                          singular, "singular locus reached" if singular else sol.message)
    if method == "RK4":
        if h is None or h <= 0:
            raise ValueError("RK4 needs a positive step h")
        return _rk4(deriv, f, s0, t_end, h, D, margin)
    raise ValueError(f"unknown method {method!r}")


def _rk4(deriv, f: _Field, s0: State, t_end: float, h: float, D: int, margin: float) -> Trajectory:
    n = max(1, int(math.ceil((t_end - s0.t) / h - 1e-9)))
    step = (t_end - s0.t) / n
    ts = [s0.t]
    ys = [np.array(s0.q + s0.v, dtype=float)]
    y = ys[0]
    singular = False
    for i in range(n):
        t = s0.t + i * step
        k1 = deriv(t, y)
        k2 = deriv(t + step / 2, y + step / 2 * k1)
        k3 = deriv(t + step / 2, y + step / 2 * k2)
        k4 = deriv(t + step, y + step * k3)
        y = y + step / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        ts.append(s0.t + (i + 1) * step)
        ys.append(y)
        if any(abs(x) <= margin for x in f.singular_values(y[:D])):
            singular = True
            break
    Y = np.array(ys)
    return Trajectory(np.array(ts), Y[:, :D], Y[:, D:], "RK4", None, None, step,
                      {"steps": len(ts) - 1, "nfev": 4 * (len(ts) - 1)}, singular,
                      "singular locus reached" if singular else "fixed-step integration finished")


@dataclass
class DriftSeries:
    name: str
    values: np.ndarray
    max_abs: float
    max_rel: float

    @property
    def initial(self) -> float:
        return float(self.values[0])

    def to_dict(self) -> dict:
        return {"name": self.name, "initial": self.initial, "max_abs_drift": self.max_abs,
                "max_rel_drift": self.max_rel}


def evaluate_along(traj: Trajectory, I: Expr, sys: SystemDef) -> np.ndarray:
    """I at every sample; implicit functions follow one branch along the samples."""
    b = sys.bound()
    I = sys.bind(I)
    names = ["t", *b.coords, *b.velocities]
    fn = compile_exprs([I], names, _trackers(b))
    out = np.empty(len(traj))
    for i in range(len(traj)):
        try:
            with np.errstate(all="ignore"):     # non-finite values are reported below
                val = fn(float(traj.t[i]), *traj.q[i], *traj.v[i])[0]
        except (ZeroDivisionError, ValueError, OverflowError, ArithmeticError) as exc:
            raise FIEvaluationError(f"cannot evaluate at sample {i} (t={traj.t[i]:.6g}): {exc}") from None
        if not math.isfinite(val):
            raise FIEvaluationError(f"non-finite value at sample {i} (t={traj.t[i]:.6g})")
        out[i] = val
    return out


def monitor_fi(traj: Trajectory, I: Expr, sys: SystemDef, name: str = "I") -> DriftSeries:
    """Values of I along the trajectory and the drift from the initial value."""
    vals = evaluate_along(traj, I, sys)
    d = np.abs(vals - vals[0])
    max_abs = float(d.max())
    return DriftSeries(name, vals, max_abs, max_abs / max(abs(float(vals[0])), 1e-30))
