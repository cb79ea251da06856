"""Adaptive integration of the self-adjoint system and adaptive quadrature.

The equation ``(a(t) x')' = rhs_p(t, x)`` is integrated as the first-order
system ``x' = p / a(t)``, ``p' = rhs_p(t, x)`` with ``p = a x'``.  The stepper
is the Dormand-Prince 5(4) pair with a PI step-size controller and the
pair's native quartic continuous extension; events are located on that
dense output.
"""

from __future__ import annotations

import io
import json
import math
import warnings
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate as _spi
from scipy.optimize import brentq

__all__ = [
    "IntegrationError",
    "StepSizeUnderflow",
    "NonPositiveCoefficient",
    "QuadratureError",
    "EventSpec",
    "Event",
    "Trajectory",
    "dopri5",
    "integrate",
    "quad",
    "A_of",
    "weight_l1",
]


class IntegrationError(RuntimeError):
    """Base class for integrator failures."""


class StepSizeUnderflow(IntegrationError):
    def __init__(self, t_last: float, msg: str = ""):
        super().__init__(msg or f"step size underflow; last reliable t = {t_last!r}")
        self.t_last = t_last


class NonPositiveCoefficient(IntegrationError):
    def __init__(self, t: float, value: float):
        super().__init__(f"leading coefficient a(t) = {value!r} <= 0 at t = {t!r}")
        self.t = t


class QuadratureError(ArithmeticError):
    pass


# Dormand-Prince 5(4) coefficients
_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_A71, _A73, _A74, _A75, _A76 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71 / 57600,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)
_D1, _D3, _D4, _D5, _D6, _D7 = (
    -12715105075 / 11282082432,
    87487479700 / 32700410799,
    -10690763975 / 1880347072,
    701980252875 / 199316789632,
    -1453857185 / 822651844,
    69997945 / 29380423,
)


@dataclass(frozen=True)
class EventSpec:
    """What to watch for during integration.

    ``kind`` is ``"zero-x"``, ``"zero-p"``, ``"x-exceeds"`` (``|x| > bound``)
    or ``"custom"`` (``fn(t, y)`` changes sign).  ``direction`` is ``"any"``,
    ``"rising"`` or ``"falling"``.
    """

    kind: str
    direction: str = "any"
    bound: float = math.inf
    terminal: bool = False
    fn: Optional[Callable] = None

    def __post_init__(self):
        if self.kind not in ("zero-x", "zero-p", "x-exceeds", "custom"):
            raise ValueError(f"unknown event kind {self.kind!r}")
        if self.direction not in ("any", "rising", "falling"):
            raise ValueError(f"unknown event direction {self.direction!r}")
        if self.kind == "custom" and self.fn is None:
            raise ValueError("custom events need fn")

    def value(self, t: float, y) -> float:
        if self.kind == "zero-x":
            return y[0]
        if self.kind == "zero-p":
            return y[1]
        if self.kind == "x-exceeds":
            return abs(y[0]) - self.bound
        return self.fn(t, y)


@dataclass(frozen=True)
class Event:
    t: float
    kind: str
    index: int
    state: tuple


class Trajectory:
    """Piecewise-polynomial solution record.

    ``t`` is the strictly increasing node grid, ``y`` the states at the nodes
    (columns ``x, p`` for the scalar equation) and ``coef`` the per-step
    coefficients of the continuous extension

        y(t_k + s h_k) = r1 + s (r2 + (1-s) (r3 + s (r4 + (1-s) r5))),

    which reproduces the stored node states exactly at ``s = 0`` and ``s = 1``.
    """

    def __init__(self, t, y, coef, hs=None, tol: float = math.nan, events=(), status: str = "ok"):
        self.t = np.asarray(t, dtype=float)
        self.y = np.asarray(y, dtype=float)
        if self.y.ndim == 1:
            self.y = self.y[:, None]
        self.coef = np.asarray(coef, dtype=float)
        self.hs = np.diff(self.t) if hs is None else np.asarray(hs, dtype=float)
        self.tol = tol
        self.events = list(events)
        self.status = status
        if self.t.size < 1 or np.any(np.diff(self.t) <= 0):
            raise ValueError("trajectory nodes must be strictly increasing")

    # -- construction helpers

    @classmethod
    def from_hermite(cls, t, y, dy, tol: float = math.nan) -> "Trajectory":
        """Cubic Hermite interpolant through node states ``y`` and derivatives ``dy``."""
        t = np.asarray(t, dtype=float)
        y = np.atleast_2d(np.asarray(y, dtype=float).T).T
        dy = np.atleast_2d(np.asarray(dy, dtype=float).T).T
        h = np.diff(t)[:, None]
        diff = y[1:] - y[:-1]
        r3 = h * dy[:-1] - diff
        r4 = diff - h * dy[1:] - r3
        coef = np.stack([y[:-1], diff, r3, r4, np.zeros_like(diff)], axis=1)
        return cls(t, y, coef, tol=tol)

    def project(self, matrix) -> "Trajectory":
        """Linear map of the state: new columns are ``y @ matrix``."""
        m = np.asarray(matrix, dtype=float)
        ev = [e for e in self.events]
        return Trajectory(self.t, self.y @ m, self.coef @ m, self.hs, self.tol, ev, self.status)

    @staticmethod
    def concatenate(parts: Sequence["Trajectory"]) -> "Trajectory":
        """Join trajectories whose ranges abut; the shared node keeps the left state."""
        ts, ys, cs, hs, evs = [], [], [], [], []
        for i, tr in enumerate(parts):
            if i and abs(tr.t[0] - parts[i - 1].t[-1]) > 1e-12 * max(1.0, abs(tr.t[0])):
                raise ValueError("trajectories do not abut")
            start = 0 if i == 0 else 1
            ts.append(tr.t[start:])
            ys.append(tr.y[start:])
            cs.append(tr.coef)
            hs.append(tr.hs)
            evs.extend(tr.events)
        tol = max((p.tol for p in parts if not math.isnan(p.tol)), default=math.nan)
        return Trajectory(np.concatenate(ts), np.concatenate(ys), np.concatenate(cs), np.concatenate(hs), tol, evs)

    # -- evaluation

    @property
    def x(self) -> np.ndarray:
        return self.y[:, 0]

    @property
    def p(self) -> np.ndarray:
        return self.y[:, 1]

    @property
    def start(self) -> float:
        return float(self.t[0])

    @property
    def end(self) -> float:
        return float(self.t[-1])

    def _locate(self, tt: np.ndarray):
        if np.any(tt < self.t[0] - 1e-12 * (1 + abs(self.t[0]))) or np.any(
            tt > self.t[-1] + 1e-12 * (1 + abs(self.t[-1]))
        ):
            raise ValueError(f"evaluation outside trajectory range [{self.t[0]}, {self.t[-1]}]")
        if self.t.size == 1:
            return np.zeros(tt.shape, dtype=int), np.zeros(tt.shape)
        k = np.clip(np.searchsorted(self.t, tt, side="right") - 1, 0, self.t.size - 2)
        s = (tt - self.t[k]) / self.hs[k]
        return k, s

    def __call__(self, tt):
        """States at ``tt`` (scalar -> shape (m,), array -> shape (n, m))."""
        arr = np.asarray(tt, dtype=float)
        if self.t.size == 1:
            out = np.broadcast_to(self.y[0], arr.shape + self.y.shape[1:]).copy()
            return out
        k, s = self._locate(np.atleast_1d(arr))
        c = self.coef[k]
        s = s[:, None]
        out = c[:, 0] + s * (c[:, 1] + (1 - s) * (c[:, 2] + s * (c[:, 3] + (1 - s) * c[:, 4])))
        # exact node reproduction
        hit = np.isin(np.atleast_1d(arr), self.t)
        if hit.any():
            idx = np.searchsorted(self.t, np.atleast_1d(arr)[hit])
            out[hit] = self.y[idx]
        return out[0] if arr.ndim == 0 else out

    def deriv(self, tt):
        """Time derivative of the interpolant."""
        arr = np.asarray(tt, dtype=float)
        k, s = self._locate(np.atleast_1d(arr))
        c = self.coef[k]
        s = s[:, None]
        r1, r2, r3, r4, r5 = (c[:, i] for i in range(5))
        # d/ds of r1 + s r2 + s(1-s) r3 + s^2 (1-s) r4 + s^2 (1-s)^2 r5
        d = r2 + (1 - 2 * s) * r3 + (2 * s - 3 * s**2) * r4 + (2 * s - 6 * s**2 + 4 * s**3) * r5
        out = d / self.hs[k][:, None]
        return out[0] if arr.ndim == 0 else out

    def sampler(self, col: int = 0) -> Callable[[float], float]:
        """Fast scalar evaluator of one state column, tuned for increasing queries."""
        t = self.t.tolist()
        hs = self.hs.tolist()
        c = self.coef[:, :, col].tolist()
        y_end = float(self.y[-1, col])
        n = len(t) - 1
        t_end = t[-1]
        state = [0]

        def f(tq: float) -> float:
            k = state[0]
            if not (t[k] <= tq < t[k + 1] if k < n else False):
                if k + 1 < n and t[k + 1] <= tq < t[k + 2]:
                    k += 1
                else:
                    if tq >= t_end:
                        return y_end if tq <= t_end + 1e-9 * (1 + abs(t_end)) else _out(tq)
                    if tq < t[0]:
                        return _out(tq)
                    k = bisect_right(t, tq) - 1
                state[0] = k
            s = (tq - t[k]) / hs[k]
            r1, r2, r3, r4, r5 = c[k]
            return r1 + s * (r2 + (1 - s) * (r3 + s * (r4 + (1 - s) * r5)))

        def _out(tq):
            raise ValueError(f"t={tq!r} outside trajectory range [{t[0]}, {t_end}]")

        if n == 0:
            y0 = float(self.y[0, col])
            return lambda tq: y0
        return f

    # -- serialization

    def to_csv(self, dest=None, columns=("t", "x", "p")) -> str:
        """CSV with fixed column order ``t, x, p``; floats written with 17 significant digits."""
        buf = io.StringIO()
        buf.write(",".join(columns) + "\n")
        ncols = len(columns) - 1
        for ti, row in zip(self.t, self.y):
            vals = [ti] + list(row[:ncols])
            buf.write(",".join(f"{v:.17g}" for v in vals) + "\n")
        text = buf.getvalue()
        if dest is not None:
            with open(dest, "w", newline="") as fh:
                fh.write(text)
        return text

    def to_dict(self) -> dict:
        return {
            "t": [float(v) for v in self.t],
            "x": [float(v) for v in self.y[:, 0]],
            "p": [float(v) for v in self.y[:, 1]] if self.y.shape[1] > 1 else [],
            "tol": None if math.isnan(self.tol) else self.tol,
            "status": self.status,
            "events": [{"t": e.t, "kind": e.kind, "index": e.index} for e in self.events],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def __len__(self):
        return self.t.size

    def __repr__(self):
        return f"Trajectory(n={self.t.size}, range=[{self.t[0]:.6g}, {self.t[-1]:.6g}], dim={self.y.shape[1]})"


def _initial_step(fun, t0, y0, f0, direction, tol):
    scale = tol * (1.0 + np.abs(y0))
    d0 = np.max(np.abs(y0) / scale)
    d1 = np.max(np.abs(f0) / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + h0 * direction * f0
    f1 = fun(t0 + h0 * direction, y1)
    d2 = np.max(np.abs(f1 - f0) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1)


def dopri5(
    fun: Callable,
    t0: float,
    t1: float,
    y0,
    tol: float = 1e-10,
    events: Sequence[EventSpec] = (),
    h0: Optional[float] = None,
    max_steps: int = 500_000,
    hmax: float = math.inf,
) -> Trajectory:
    """Integrate ``y' = fun(t, y)`` from ``t0`` to ``t1 > t0``.

    Per step the error estimate satisfies ``|err_i| <= tol (1 + max(|y_i|))``
    componentwise.  Terminal events end the integration at the event time.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if not t1 > t0:
        raise ValueError("integration requires t1 > t0")
    y = np.array(y0, dtype=float)
    t = float(t0)
    k1 = np.asarray(fun(t, y), dtype=float)
    if not np.all(np.isfinite(k1)):
        raise IntegrationError(f"non-finite derivative at t = {t!r}")
    span = t1 - t0
    h = h0 if h0 is not None else _initial_step(fun, t, y, k1, 1.0, tol)
    h = min(max(h, 1e3 * np.finfo(float).eps * max(1.0, abs(t))), span, hmax)
    ts, ys, coefs, hs_list = [t], [y.copy()], [], []
    evs: list[Event] = []
    g_old = [ev.value(t, y) for ev in events]
    err_old = 1e-4
    reject = False
    status = "ok"
    nsteps = 0
    safety, facmin, facmax = 0.9, 0.2, 10.0
    beta = 0.04
    expo = 0.2 - 0.75 * beta
    while t < t1:
        nsteps += 1
        if nsteps > max_steps:
            raise StepSizeUnderflow(t, f"maximum number of steps exceeded at t = {t!r}")
        if t + h >= t1 or t + 1.01 * h >= t1:
            h = t1 - t
        if h < 16 * np.finfo(float).eps * max(1.0, abs(t)):
            raise StepSizeUnderflow(t)
        k2 = fun(t + _C2 * h, y + h * (_A21 * k1))
        k3 = fun(t + _C3 * h, y + h * (_A31 * k1 + _A32 * k2))
        k4 = fun(t + _C4 * h, y + h * (_A41 * k1 + _A42 * k2 + _A43 * k3))
        k5 = fun(t + _C5 * h, y + h * (_A51 * k1 + _A52 * k2 + _A53 * k3 + _A54 * k4))
        k6 = fun(t + h, y + h * (_A61 * k1 + _A62 * k2 + _A63 * k3 + _A64 * k4 + _A65 * k5))
        ynew = y + h * (_A71 * k1 + _A73 * k3 + _A74 * k4 + _A75 * k5 + _A76 * k6)
        k7 = fun(t + h, ynew)
        errv = h * (_E1 * k1 + _E3 * k3 + _E4 * k4 + _E5 * k5 + _E6 * k6 + _E7 * k7)
        sc = tol * (1.0 + np.maximum(np.abs(y), np.abs(ynew)))
        err = float(np.max(np.abs(errv) / sc))
        if not math.isfinite(err):
            h *= 0.1
            reject = True
            continue
        if err <= 1.0:
            tnew = t + h
            if tnew >= t1 or h == t1 - t:
                tnew = t1
            ydiff = ynew - y
            bspl = h * k1 - ydiff
            r5 = h * (_D1 * k1 + _D3 * k3 + _D4 * k4 + _D5 * k5 + _D6 * k6 + _D7 * k7)
            coef = np.stack([y, ydiff, bspl, ydiff - h * k7 - bspl, r5])
            stop_at = None
            if events:
                hits = []
                for i, ev in enumerate(events):
                    g1 = ev.value(tnew, ynew)
                    g0 = g_old[i]
                    crossed = (g0 < 0 < g1) or (g0 > 0 > g1) or (g1 == 0 and g0 != 0)
                    if crossed:
                        rising = g1 > g0
                        if ev.direction == "any" or (ev.direction == "rising") == rising:
                            te = _locate_event(ev, t, h, coef, g0, g1)
                            hits.append((te, i))
                    g_old[i] = g1
                hits.sort()
                for te, i in hits:
                    s = (te - t) / h
                    ye = coef[0] + s * (coef[1] + (1 - s) * (coef[2] + s * (coef[3] + (1 - s) * coef[4])))
                    evs.append(Event(te, events[i].kind, i, tuple(float(v) for v in ye)))
                    if events[i].terminal:
                        stop_at = (te, ye)
                        break
            coefs.append(coef)
            hs_list.append(h)
            if stop_at is not None:
                te, ye = stop_at
                if te <= t:
                    coefs.pop()
                    hs_list.pop()
                    break
                ts.append(te)
                ys.append(np.array(ye))
                status = "event"
                break
            t = tnew
            y = ynew
            k1 = k7
            ts.append(t)
            ys.append(y.copy())
            fac11 = err**expo
            fac = fac11 / (err_old**beta) / safety
            fac = min(1 / facmin, max(1 / facmax, fac))
            hnew = h / fac
            if reject:
                hnew = min(hnew, h)
            err_old = max(err, 1e-4)
            reject = False
            h = min(hnew, hmax)
        else:
            fac = min(1 / facmin, err**expo / safety)
            h = h / fac
            reject = True
    if len(ts) == 1:
        coefs_arr = np.zeros((0, 5, y.size))
    else:
        coefs_arr = np.array(coefs)
    return Trajectory(np.array(ts), np.array(ys), coefs_arr, np.array(hs_list), tol, evs, status)


def _locate_event(ev, t, h, coef, g0, g1):
    def g(s):
        y = coef[0] + s * (coef[1] + (1 - s) * (coef[2] + s * (coef[3] + (1 - s) * coef[4])))
        return ev.value(t + s * h, y)

    if g1 == 0:
        return t + h
    try:
        s = brentq(g, 0.0, 1.0, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    except ValueError:
        s = 1.0
    return t + s * h


def integrate(
    a: Callable[[float], float],
    rhs_p: Callable[[float, float], float],
    t0: float,
    t1: float,
    x0: float,
    p0: float,
    tol: float = 1e-10,
    events: Sequence[EventSpec] = (),
    **kwargs,
) -> Trajectory:
    """Integrate ``(a x')' = rhs_p(t, x)`` on ``[t0, t1]`` from ``x(t0) = x0``, ``a x'(t0) = p0``.

    Raises NonPositiveCoefficient if ``a(t) <= 0`` is met and StepSizeUnderflow
    (carrying the last reliable t) if the step size collapses.
    """

    def fun(t, y):
        at = a(t)
        if not at > 0:
            raise NonPositiveCoefficient(t, at)
        return np.array((y[1] / at, rhs_p(t, y[0])))

    return dopri5(fun, t0, t1, (x0, p0), tol, events, **kwargs)


def quad(f: Callable[[float], float], t0: float, t1: float, tol: float = 1e-10, limit: int = 500) -> float:
    """Adaptive Gauss-Kronrod quadrature of ``f`` over ``[t0, t1]``.

    Raises QuadratureError on a non-finite sample or if the error indicator
    exceeds ``tol * (1 + |I|)``.
    """
    if t1 == t0:
        return 0.0

    def g(s):
        v = f(s)
        if not math.isfinite(v):
            raise QuadratureError(f"non-finite integrand at t = {s!r}")
        return v

    with warnings.catch_warnings():
        # the error indicator is checked below
        warnings.simplefilter("ignore", _spi.IntegrationWarning)
        val, err = _spi.quad(g, t0, t1, epsabs=tol, epsrel=tol, limit=limit)
    if not err <= max(tol * (1.0 + abs(val)), 1e3 * np.finfo(float).eps * abs(val)):
        raise QuadratureError(f"quadrature error indicator {err:.3g} exceeds tolerance on [{t0}, {t1}]")
    return float(val)


def A_of(a: Callable[[float], float], t: float, tol: float = 1e-12) -> float:
    """``A(t) = integral_0^t ds / a(s)``."""
    if t < 0:
        raise ValueError("A_of needs t >= 0")
    return quad(lambda s: 1.0 / a(s), 0.0, t, tol)


def weight_l1(b: Callable[[float], float], tol: float = 1e-12) -> float:
    """L1 norm of ``b`` on ``[0, 1]``."""
    return quad(lambda s: abs(b(s)), 0.0, 1.0, tol)
