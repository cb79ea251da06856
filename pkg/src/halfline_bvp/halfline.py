"""The problem on [1, inf): positive decreasing solutions with ``x(1) = c`` and ``x -> 0``.

Solutions are fixed points of ``u -> x_u``, where ``x_u`` is the principal
solution of the linearized equation ``(a x')' + b F~(u) x = 0`` with
``x_u(1) = c``.  The order interval between the minorant principal solution
``w0`` and the majorant principal solution ``y0`` is invariant under this map.
"""

from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .conditions import ProblemSpec
from .linear_theory import (
    LadderNotConverged,
    LinearEq,
    PrincipalClassification,
    ZeroInRange,
    classify,
    is_disconjugate_dual_halfline,
    principal_solution_ex,
)
from .odeint import QuadratureError, Trajectory

__all__ = [
    "HalflineSolution",
    "NotConverged",
    "SandwichViolation",
    "DisconjugacyNotCertified",
    "RegularizedQuotient",
    "PAD",
    "ladder_top",
    "majorant_principal",
    "minorant_principal",
    "solve_sec",
    "sandwich_bounds",
    "SlopeMap",
    "slope_map",
    "verify_int",
    "eq1_residual",
]

PAD = 1.25  # ladder top relative to the reported horizon, measured from t = 1
SANDWICH_TOL = 1e-4


class NotConverged(RuntimeError):
    def __init__(self, msg, history=None):
        super().__init__(msg)
        self.history = history or []


class SandwichViolation(RuntimeError):
    pass


class DisconjugacyNotCertified(RuntimeError):
    pass


class RegularizedQuotient:
    """``F(v)/v`` for ``v > 0`` and ``k0`` for ``v <= 0``."""

    def __init__(self, F):
        self.F = F
        self.k0 = F.k0

    def __call__(self, v: float) -> float:
        return self.F.quotient(v) if v > 0 else self.k0


def ladder_top(spec: ProblemSpec) -> float:
    return 1.0 + PAD * (spec.T_max - 1.0)


def _trim(tr: Trajectory, hi: float) -> Trajectory:
    """Restriction to ``[start, hi]``; ``hi`` must be a node."""
    k = int(np.searchsorted(tr.t, hi * (1 + 1e-15) + 1e-300, side="right"))
    if abs(tr.t[k - 1] - hi) > 1e-12 * max(1.0, abs(hi)):
        raise ValueError(f"{hi} is not a node of the trajectory")
    return Trajectory(tr.t[:k], tr.y[:k], tr.coef[: k - 1], tr.hs[: k - 1], tr.tol, tr.events, tr.status)


def _certify(spec: ProblemSpec):
    v = is_disconjugate_dual_halfline(spec.a, spec.B * spec.K, 1.0, ladder_top(spec), spec.ode_tol)
    if not v.certified:
        raise DisconjugacyNotCertified(f"dual of the majorant equation not certified: {v.status} ({v.detail})")
    return v


def _principal(spec, beta, c, tol):
    eq = LinearEq(spec.a, beta, (1.0, math.inf))
    return principal_solution_ex(
        eq, 1.0, c, ladder_top(spec), tol, spec.ode_tol, T_out=ladder_top(spec), check_until=spec.T_max
    )


def majorant_principal(spec: ProblemSpec, c: float, tol: float = SANDWICH_TOL, full: bool = False) -> Trajectory:
    """Principal solution of ``(a y')' + B K y = 0`` with ``y(1) = c``."""
    _certify(spec)
    M = spec.B * spec.K
    tr = _principal(spec, lambda t: M, c, tol).trajectory
    return tr if full else _trim(tr, spec.T_max)


def minorant_principal(spec: ProblemSpec, c: float, tol: float = SANDWICH_TOL, full: bool = False) -> Trajectory:
    """Principal solution of ``(a w')' - K b_- w = 0`` with ``w(1) = c``."""
    _certify(spec)
    b, K = spec.b, spec.K

    def beta(t):
        v = b(t)
        return K * v if v < 0 else 0.0

    tr = _principal(spec, beta, c, tol).trajectory
    return tr if full else _trim(tr, spec.T_max)


# ------------------------------------------------------------------ solution


@dataclass
class HalflineSolution:
    c: float
    slope: float
    trajectory: Trajectory  # on [1, T_max]
    sandwich: Optional[tuple]  # (w0, y0) on [1, T_max], None in linear-hook mode
    int_stat: Optional[PrincipalClassification]
    iterations: int
    residual: float
    history: list = field(default_factory=list)
    full: Optional[Trajectory] = None  # on [1, ladder top]
    extrapolation: str = ""

    def to_dict(self) -> dict:
        return {
            "c": self.c,
            "slope": self.slope,
            "iterations": self.iterations,
            "residual": self.residual,
            "history": list(self.history),
            "int_verdict": None if self.int_stat is None else self.int_stat.verdict,
            "T_max": self.trajectory.end,
            "x_T_max": float(self.trajectory.x[-1]),
            "extrapolation": self.extrapolation,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def to_csv(self, dest=None) -> str:
        return self.trajectory.to_csv(dest)


def _sandwich_check(x: Trajectory, w0: Trajectory, y0: Trajectory, c: float, slack: float):
    t = x.t
    xv = x.x
    lo = w0(t)[:, 0]
    hi = y0(t)[:, 0]
    below = float(np.max(lo - xv))
    above = float(np.max(xv - hi))
    ok = below <= slack * c and above <= slack * c
    return ok, below, above


def solve_sec(
    spec: ProblemSpec,
    c: float,
    tol: Optional[float] = None,
    seed="majorant",
    theta: float = 1.0,
    max_iter: int = 80,
    check_sandwich: bool = True,
    record_iterates: bool = False,
    bounds: Optional[tuple] = None,
) -> HalflineSolution:
    """Fixed point of ``u -> x_u`` started from ``seed`` ("majorant", "minorant" or a Trajectory/callable).

    Stops when successive iterates differ by less than ``tol * c`` at the
    nodes of ``[1, T_max]``; the relaxation ``theta`` is halved whenever the
    distance between iterates grows.  ``bounds`` may carry the certified pair
    ``(w0, y0)`` for ``c = 1`` on the full ladder range; it is rescaled to ``c``.
    """
    if not c > 0:
        raise ValueError("c must be positive")
    tol = spec.tol if tol is None else tol
    b = spec.b
    Ft = RegularizedQuotient(spec.F)

    if spec.linear_hook:
        res = _principal(spec, b, c, tol)
        full = res.trajectory
        x = _trim(full, spec.T_max)
        return _finish(spec, c, x, full, None, 1, [0.0], res.mode)

    if bounds is None:
        bounds = sandwich_bounds(spec)
    w0f, y0f = (tr.project(np.diag([c, c])) for tr in bounds)
    y0, w0 = _trim(y0f, spec.T_max), _trim(w0f, spec.T_max)

    if isinstance(seed, str):
        u = {"majorant": y0f, "minorant": w0f}[seed]
    else:
        u = seed
    grid = np.linspace(1.0, spec.T_max, 1001)

    history: list[float] = []
    iterates = []
    x = None
    mode = ""
    prev_corr = None
    for it in range(1, max_iter + 1):
        uf = u.sampler(0) if isinstance(u, Trajectory) else u
        u_end = u.end if isinstance(u, Trajectory) else math.inf

        def beta(t, uf=uf, u_end=u_end):
            return b(t) * Ft(uf(min(t, u_end)))

        try:
            res = _principal(spec, beta, c, tol)
        except LadderNotConverged as exc:
            raise NotConverged(f"linearized problem failed at iteration {it}: {exc}", history) from exc
        xf = res.trajectory
        mode = res.mode
        x = _trim(xf, spec.T_max)
        if check_sandwich:
            ok, below, above = _sandwich_check(x, w0, y0, c, SANDWICH_TOL)
            if not ok:
                raise SandwichViolation(
                    f"iterate {it} leaves [w0, y0]: max(w0 - x) = {below:.3g}, max(x - y0) = {above:.3g}"
                )
        if record_iterates:
            iterates.append(x)
        uv = _values(u, x.t, u_end)
        dist = float(np.max(np.abs(x.x - uv)))
        history.append(dist)
        if dist <= tol * c:
            break
        corr = xf(grid)[:, 0] - _values(u, grid, u_end)
        if (len(history) >= 2 and history[-1] > history[-2]) or (
            prev_corr is not None and float(np.dot(corr, prev_corr)) < 0 and history[-1] > 0.5 * history[-2]
        ):
            theta = max(theta * 0.5, 1.0 / 16)
        prev_corr = corr
        u = xf if theta >= 1.0 else _blend(u, xf, theta)
    else:
        raise NotConverged(f"fixed-point iteration did not converge in {max_iter} iterations", history)
    sol = _finish(spec, c, x, xf, (w0, y0), len(history), history, mode)
    if record_iterates:
        sol.iterates = iterates
    return sol


def _values(u, ts, end=math.inf):
    ts = np.minimum(ts, end)
    if isinstance(u, Trajectory):
        return u(ts)[:, 0]
    return np.array([u(t) for t in ts])


def _blend(u, xf: Trajectory, theta: float) -> Trajectory:
    """``(1 - theta) u + theta xf`` as a Hermite trajectory on the nodes of ``xf``."""
    t = xf.t
    if isinstance(u, Trajectory):
        tt = np.minimum(t, u.end)
        U, dU = u(tt), u.deriv(tt)
        dU[t > u.end] = 0.0
    else:
        U = np.column_stack([[u(v) for v in t], np.zeros(t.size)])
        dU = np.column_stack([np.gradient(U[:, 0], t), np.zeros(t.size)])
    return Trajectory.from_hermite(t, (1 - theta) * U + theta * xf.y, (1 - theta) * dU + theta * xf.deriv(t), xf.tol)


def sandwich_bounds(spec: ProblemSpec) -> tuple:
    """``(w0, y0)`` for ``c = 1`` on ``[1, ladder top]``, after certifying the dual equation."""
    _certify(spec)
    return minorant_principal(spec, 1.0, full=True), majorant_principal(spec, 1.0, full=True)


def _finish(spec, c, x, full, sandwich, iterations, history, mode) -> HalflineSolution:
    slope = float(x.p[0] / spec.a(1.0))
    sol = HalflineSolution(c, slope, x, sandwich, None, iterations, math.nan, list(history), full, mode)
    sol.residual = eq1_residual(x, spec)
    verify_int(sol, spec)
    return sol


# ----------------------------------------------------------------- slope map


class SlopeMap:
    """``c -> x'(1)`` for the half-line solution, with a thread-safe cache keyed by ``c``."""

    def __init__(self, spec: ProblemSpec, tol: Optional[float] = None):
        self.spec = spec
        self.tol = tol
        self._cache: dict[float, HalflineSolution] = {}
        self._lock = threading.Lock()
        self._bounds = None

    def solution(self, c: float) -> HalflineSolution:
        c = float(c)
        with self._lock:
            hit = self._cache.get(c)
        if hit is not None:
            return hit
        if self._bounds is None and not self.spec.linear_hook:
            b = sandwich_bounds(self.spec)
            with self._lock:
                self._bounds = self._bounds or b
        sol = solve_sec(self.spec, c, self.tol, seed=self._warm(c), bounds=self._bounds)
        with self._lock:
            self._cache.setdefault(c, sol)
            return self._cache[c]

    def _warm(self, c: float):
        with self._lock:
            if not self._cache:
                return "majorant"
            near = min(self._cache, key=lambda k: abs(math.log(k / c)))
            sol = self._cache[near]
        if sol.full is None:
            return "majorant"
        r = c / near
        return sol.full.project(np.diag([r, r]))

    def __call__(self, c: float) -> float:
        return self.solution(c).slope

    def cached(self) -> dict:
        with self._lock:
            return dict(self._cache)


def slope_map(spec: ProblemSpec, c: float, cache: Optional[SlopeMap] = None) -> float:
    """``s(c) = x'(1)`` of the half-line solution with ``x(1) = c``."""
    m = cache if cache is not None else _default_map(spec)
    return m(c)


_maps: dict[int, SlopeMap] = {}
_maps_lock = threading.Lock()


def _default_map(spec: ProblemSpec) -> SlopeMap:
    with _maps_lock:
        m = _maps.get(id(spec))
        if m is None or m.spec is not spec:
            m = _maps[id(spec)] = SlopeMap(spec)
        return m


def verify_int(sol: HalflineSolution, spec: ProblemSpec) -> PrincipalClassification:
    """Increment pattern of ``int_1^T dt / (a x^2)`` on the solution; recorded in ``sol``.

    Where the profile underflows to zero (past a saturated ladder) the test
    runs on the part where it is still positive.
    """
    eq = LinearEq(spec.a, lambda t: 0.0)
    tr = sol.trajectory
    nz = np.flatnonzero(tr.x <= 0)
    end = tr.end if nz.size == 0 else float(tr.t[max(int(nz[0]) - 1, 1)])
    try:
        sol.int_stat = classify(eq, tr.sampler(0), end, T=tr.start)
    except (ZeroInRange, QuadratureError):
        sol.int_stat = PrincipalClassification([], [], "inconclusive")
    return sol.int_stat


# ------------------------------------------------------------------ residual

_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


def eq1_residual(tr: Trajectory, spec: ProblemSpec, n: int = 1000, t0: Optional[float] = None, t1: Optional[float] = None) -> float:
    """Integral-form defect of ``(a x')' + b F(x) = 0`` over ``n`` sample subintervals.

    On each subinterval ``[s_i, s_{i+1}]`` the two quantities
    ``x(s_{i+1}) - x(s_i) - int p/a`` and ``p(s_{i+1}) - p(s_i) + int b F(x)``
    are computed (Gauss-Legendre per integrator step) and scaled by
    ``1 + max|x|`` and ``1 + max|p|``; the largest value is returned.
    """
    t0 = tr.start if t0 is None else t0
    t1 = tr.end if t1 is None else t1
    samples = np.linspace(t0, t1, n + 1)
    inner = tr.t[(tr.t > t0) & (tr.t < t1)]
    brk = np.unique(np.concatenate([samples, inner]))
    lo, hi = brk[:-1], brk[1:]
    mid, half = (lo + hi) / 2, (hi - lo) / 2
    pts = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    st = tr(pts)
    xs, ps = st[:, 0], st[:, 1]
    av = _vec(spec.a, pts)
    bv = _vec(spec.b, pts)
    Fv = np.array([spec.F.F(v) for v in xs])
    w = (half[:, None] * _GL_W[None, :])
    ix = np.sum((ps / av).reshape(w.shape) * w, axis=1)
    ip = np.sum((bv * Fv).reshape(w.shape) * w, axis=1)
    # accumulate per sample interval
    which = np.searchsorted(samples, lo, side="right") - 1
    Ix = np.bincount(which, ix, minlength=n)
    Ip = np.bincount(which, ip, minlength=n)
    ends = tr(samples)
    dx = np.diff(ends[:, 0]) - Ix
    dp = np.diff(ends[:, 1]) + Ip
    sx = 1.0 + float(np.max(np.abs(tr.x)))
    sp = 1.0 + float(np.max(np.abs(tr.p)))
    return float(max(np.max(np.abs(dx)) / sx, np.max(np.abs(dp)) / sp))


def _vec(f, ts):
    v = getattr(f, "vector", None)
    if v is not None:
        return v(ts)
    return np.array([f(t) for t in ts])
