"""Cauchy problems on [0, 1] with a truncated nonlinearity, and the sweep over the initial slope.

For ``ell > 0`` the problem ``(a x')' + b F^(x) = 0``, ``x(0) = 0``, ``x'(0) = ell``
is solved on ``[0, 1]``.  The map ``ell -> (x(1), x'(1))`` traces the cross
section used by :mod:`halfline_bvp.matcher`; its two anchors are the first
slopes where ``x'(1) = 0`` (positive hump ending flat) and ``x(1) = 0``.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from .conditions import Nonlinearity, ProblemSpec
from .odeint import A_of, EventSpec, Trajectory, integrate

__all__ = [
    "TruncatedNonlinearity",
    "NoBracket",
    "RefinementCapExceeded",
    "AnchorResult",
    "CrossSection",
    "truncation",
    "solve_cauchy",
    "sweep",
    "find_delta1",
    "find_delta2",
    "cross_section",
]

DELTA = 1e-3  # margin near the endpoints for positivity checks
ELL_LO = 1e-6
ELL_HI = 1e4
SWEEP_POINTS = 81


class NoBracket(RuntimeError):
    def __init__(self, msg, sweep=None):
        super().__init__(msg)
        self.sweep = sweep


class RefinementCapExceeded(RuntimeError):
    def __init__(self, msg, interval=None, section=None):
        super().__init__(msg)
        self.interval = interval
        self.section = section


@dataclass
class TruncatedNonlinearity:
    """``0`` for ``u < 0``, ``F(u)`` on ``[0, L]`` and ``F(L)`` above ``L``."""

    base: Nonlinearity
    L: float

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError("truncation level must be positive")
        self._top = float(self.base.F(self.L))

    def __call__(self, u: float) -> float:
        if u <= 0.0:
            return 0.0
        if u >= self.L:
            return self._top
        return float(self.base.F(u))

    @property
    def lipschitz(self) -> float:
        return self.base.K


def truncation(spec: ProblemSpec, ell_hi: float = ELL_HI) -> TruncatedNonlinearity:
    """Truncation at ``L = ell_hi a(0) A(1)``, the a priori bound of every sweep trajectory."""
    return TruncatedNonlinearity(spec.F, ell_hi * spec.a(0.0) * A_of(spec.a, 1.0))


def solve_cauchy(spec: ProblemSpec, Fhat: Callable[[float], float], ell: float, tol: Optional[float] = None) -> Trajectory:
    """Trajectory on ``[0, 1]`` with ``x(0) = 0`` and ``x'(0) = ell``; zeros of x and p are recorded."""
    if not ell > 0:
        raise ValueError("ell must be positive")
    b = spec.b
    events = (EventSpec("zero-x"), EventSpec("zero-p"))
    return integrate(spec.a, lambda t, x: -b(t) * Fhat(x), 0.0, 1.0, 0.0, spec.a(0.0) * ell, spec.ode_tol if tol is None else tol, events)


def _end(spec, tr):
    x1, p1 = tr.y[-1]
    return float(x1), float(p1 / spec.a(1.0))


@dataclass
class AnchorResult:
    ell: float
    trajectory: Trajectory
    brackets: list  # every (ell_lo, ell_hi) sign change seen in the sweep
    sweep: list  # (ell, x(1), p(1))

    def __iter__(self):
        yield self.ell
        yield self.trajectory


def sweep(spec: ProblemSpec, Fhat=None, ell_lo: float = ELL_LO, ell_hi: float = ELL_HI, points: int = SWEEP_POINTS):
    """``(ell, x(1), p(1))`` on a log-spaced grid of slopes."""
    Fhat = truncation(spec, ell_hi) if Fhat is None else Fhat
    out = []
    for ell in np.geomspace(ell_lo, ell_hi, points):
        tr = solve_cauchy(spec, Fhat, float(ell))
        out.append((float(ell), float(tr.y[-1, 0]), float(tr.y[-1, 1])))
    return out


def _positive(tr: Trajectory, lo: float, hi: float) -> bool:
    ts = tr.t[(tr.t >= lo) & (tr.t <= hi)]
    ts = np.concatenate([ts, np.linspace(lo, hi, 201)])
    return bool(np.all(tr(ts)[:, 0] > 0))


def _find(spec, col, ell_hi, Fhat, positivity, label):
    Fhat = truncation(spec, ell_hi) if Fhat is None else Fhat
    data = sweep(spec, Fhat, ELL_LO, ell_hi)
    a0 = spec.a(0.0)

    def g(ell):
        return float(solve_cauchy(spec, Fhat, ell).y[-1, col])

    def small(ell, v):
        scale = 1.0 if col == 0 else spec.a(1.0)
        return abs(v) / scale <= 1e-9 * (1.0 + ell)

    brackets, hits = [], []
    for (l0, *v0), (l1, *v1) in zip(data, data[1:]):
        if small(l0, v0[col]):
            hits.append(l0)
        if v0[col] > 0 > v1[col]:
            brackets.append((l0, l1))
    cands = sorted([(l, l) for l in hits] + brackets)
    for lo, hi in cands:
        ell = lo if lo == hi else brentq(g, lo, hi, xtol=1e-15 * hi, rtol=4 * np.finfo(float).eps, maxiter=200)
        tr = solve_cauchy(spec, Fhat, ell)
        v = tr.y[-1, col]
        if not small(ell, v):
            continue
        if positivity(tr):
            return AnchorResult(ell, tr, brackets, data)
    raise NoBracket(f"no {label} solution with slope in (0, {ell_hi:g}]", data)


def find_delta1(spec: ProblemSpec, ell_hi: float = ELL_HI, Fhat=None) -> AnchorResult:
    """First slope with ``x(1) = 0`` and ``x > 0`` on ``(delta, 1 - delta)``."""
    return _find(spec, 0, ell_hi, Fhat, lambda tr: _positive(tr, DELTA, 1.0 - DELTA), "x(1) = 0")


def find_delta2(spec: ProblemSpec, ell_hi: float = ELL_HI, Fhat=None) -> AnchorResult:
    """First slope with ``x'(1) = 0`` and ``x > 0`` on ``(delta, 1]``."""
    return _find(spec, 1, ell_hi, Fhat, lambda tr: _positive(tr, DELTA, 1.0), "x'(1) = 0")


# ------------------------------------------------------------ cross section


@dataclass
class CrossSection:
    entries: np.ndarray  # rows (ell, x1, xp1), sorted by ell
    beta: float
    alpha: float
    modulus: float  # max |jump| / d(ell) over adjacent entries
    widened: bool = False
    refinements: int = 0
    notes: list = field(default_factory=list)
    trajectories: dict = field(default_factory=dict, repr=False)

    @property
    def ell(self):
        return self.entries[:, 0]

    @property
    def x1(self):
        return self.entries[:, 1]

    @property
    def xp1(self):
        return self.entries[:, 2]

    def quadrant(self) -> np.ndarray:
        """Mask of entries in the closed fourth quadrant ``x1 >= 0 >= xp1``."""
        tol = 1e-9 * (1.0 + np.abs(self.entries).max())
        return (self.x1 >= -tol) & (self.xp1 <= tol)

    def quadrant_connected(self) -> bool:
        m = self.quadrant()
        idx = np.flatnonzero(m)
        return bool(idx.size and np.all(np.diff(idx) == 1))

    def to_csv(self, dest=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("ell", "x1", "xp1"))
        for row in self.entries:
            w.writerow(tuple("%.17g" % v for v in row))
        text = buf.getvalue()
        if dest is not None:
            with open(dest, "w") as fh:
                fh.write(text)
        return text


def cross_section(
    spec: ProblemSpec,
    beta: float,
    alpha: float,
    n: int = 32,
    Fhat=None,
    jump: float = 0.05,
    cap: int = 2000,
    workers: int = 1,
    keep: bool = False,
) -> CrossSection:
    """Section ``{(x(1), x'(1))}`` over ``ell in [beta, alpha]``.

    Starts from ``n + 1`` uniform slopes and bisects every interval whose
    endpoints are further apart than ``jump`` times the section diameter,
    until none is left or ``cap`` entries exist.  If ``beta == alpha`` the
    range is widened by 10% on each side and a note is recorded.
    """
    if n < 32:
        raise ValueError("n must be at least 32")
    if not 0 < beta <= alpha:
        raise ValueError("need 0 < beta <= alpha")
    notes = []
    widened = False
    if alpha - beta <= 1e-12 * alpha:
        beta, alpha = 0.9 * beta, 1.1 * alpha
        widened = True
        notes.append("anchors coincide; range widened by 10% each side")
    Fhat = truncation(spec, max(alpha, ELL_HI)) if Fhat is None else Fhat
    trs = {}

    def run(ells):
        def one(ell):
            tr = solve_cauchy(spec, Fhat, ell)
            return ell, tr

        if workers > 1:
            with ThreadPoolExecutor(workers) as ex:
                res = list(ex.map(one, ells))
        else:
            res = [one(e) for e in ells]
        for ell, tr in res:
            trs[ell] = tr

    def row(ell):
        tr = trs[ell]
        return (ell, float(tr.y[-1, 0]), float(tr.y[-1, 1] / spec.a(1.0)))

    run([float(v) for v in np.linspace(beta, alpha, n + 1)])
    rounds = 0
    while True:
        ells = sorted(trs)
        pts = np.array([row(e)[1:] for e in ells])
        diam = float(np.max(np.ptp(pts, axis=0))) or 1.0
        gaps = np.hypot(*np.diff(pts, axis=0).T)
        bad = np.flatnonzero(gaps > jump * diam)
        if bad.size == 0:
            break
        if len(ells) + bad.size > cap:
            i = int(bad[np.argmax(gaps[bad])])
            raise RefinementCapExceeded(
                f"section refinement cap {cap} reached near ell in [{ells[i]:.6g}, {ells[i + 1]:.6g}]",
                (ells[i], ells[i + 1]),
            )
        run([0.5 * (ells[i] + ells[i + 1]) for i in bad])
        rounds += 1
    entries = np.array([row(e) for e in sorted(trs)])
    dl = np.diff(entries[:, 0])
    jumps = np.hypot(*np.diff(entries[:, 1:], axis=0).T)
    modulus = float(np.max(jumps / dl)) if dl.size else 0.0
    return CrossSection(entries, beta, alpha, modulus, widened, rounds, notes, trs if keep else {})
