"""Matching the shooting section on [0, 1] with the slope curve of the half-line problem.

Along the section ``ell -> (c, d) = (x(1), x'(1))`` the gap ``d - s(c)`` is
positive at the anchor with ``d = 0`` and negative at the anchor with
``c = 0``; a root gives a global solution whose two pieces agree in value and
slope at ``t = 1``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .conditions import ProblemSpec
from .halfline import HalflineSolution, SlopeMap, eq1_residual
from .linear_theory import LinearEq, classify
from .odeint import Trajectory
from .shooting import DELTA, CrossSection, cross_section, find_delta1, find_delta2, solve_cauchy, truncation

__all__ = [
    "MatchCurve",
    "GlobalSolution",
    "NoSignChange",
    "VerificationFailed",
    "build_match_curve",
    "solve_bvp",
    "verify",
    "stability_check",
    "gap_tol",
]

C_LIMIT = 1e-12  # relative size of c below which s(c) is taken as its limit 0


class NoSignChange(RuntimeError):
    def __init__(self, msg, curve=None):
        super().__init__(msg)
        self.curve = curve


class VerificationFailed(RuntimeError):
    def __init__(self, msg, solution=None):
        super().__init__(msg)
        self.solution = solution


def gap_tol(d: float, s: float) -> float:
    return 1e-7 * (1.0 + abs(d) + abs(s))


@dataclass
class MatchCurve:
    entries: np.ndarray  # rows (ell, c, d, s, gap); s, gap are nan where not evaluated
    flags: list  # (ell, reason) for entries outside the quadrant or failed solves
    modulus: float = math.nan

    @property
    def ell(self):
        return self.entries[:, 0]

    @property
    def gap(self):
        return self.entries[:, 4]

    def sign_changes(self) -> list:
        """Adjacent evaluated entries ``(i, j)`` with opposite gap signs (zeros count as changes)."""
        ok = np.flatnonzero(np.isfinite(self.gap))
        out = []
        for i, j in zip(ok, ok[1:]):
            gi, gj = self.gap[i], self.gap[j]
            if gi == 0 or gi * gj < 0:
                out.append((int(i), int(j)))
        return out

    def to_csv(self, dest=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("ell", "c", "d", "s", "gap"))
        for row in self.entries:
            w.writerow(tuple("%.17g" % v for v in row))
        text = buf.getvalue()
        if dest is not None:
            with open(dest, "w") as fh:
                fh.write(text)
        return text


def _slope(smap: SlopeMap, c: float, cmax: float):
    if c <= C_LIMIT * cmax:
        return 0.0, "s(c) taken as its limit 0"
    return smap(c), None


def build_match_curve(
    spec: ProblemSpec, section: CrossSection, smap: Optional[SlopeMap] = None, workers: int = 1
) -> MatchCurve:
    """Gap ``d - s(c)`` at every section entry in the closed fourth quadrant."""
    smap = SlopeMap(spec) if smap is None else smap
    ent = section.entries
    cmax = float(np.max(np.abs(ent[:, 1]))) or 1.0
    quad = section.quadrant()
    rows = np.full((len(ent), 5), np.nan)
    rows[:, :3] = ent
    flags = []

    def one(i):
        c, d = ent[i, 1], ent[i, 2]
        try:
            s, note = _slope(smap, max(c, 0.0), cmax)
        except Exception as exc:  # flagged, curve still returned
            return i, math.nan, f"slope map failed: {exc}"
        return i, s, note

    todo = [i for i in range(len(ent)) if quad[i]]
    flags.extend((float(ent[i, 0]), "outside the fourth quadrant") for i in range(len(ent)) if not quad[i])
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            res = list(ex.map(one, todo))
    else:
        res = [one(i) for i in todo]
    for i, s, note in res:
        rows[i, 3] = s
        rows[i, 4] = ent[i, 2] - s
        if note:
            flags.append((float(ent[i, 0]), note))
    fin = np.isfinite(rows[:, 4])
    r = rows[fin]
    mod = float(np.max(np.abs(np.diff(r[:, 4])) / np.diff(r[:, 0]))) if len(r) > 1 else math.nan
    flags.sort()
    return MatchCurve(rows, flags, mod)


# ------------------------------------------------------------------ solution


@dataclass
class GlobalSolution:
    ell_star: float
    junction: tuple  # (c, d, s): x(1), left slope x'(1-), right slope x'(1+)
    trajectory: Trajectory  # merged on [0, T_max]
    left: Trajectory  # [0, 1]
    right: Trajectory  # [1, T_max]
    halfline: HalflineSolution
    report: dict = field(default_factory=dict)
    curve: Optional[MatchCurve] = None
    section: Optional[CrossSection] = None
    anchors: dict = field(default_factory=dict)
    roots: list = field(default_factory=list)  # (ell, c, d, s) of every polished root
    stability: Optional[dict] = None

    @property
    def passed(self) -> bool:
        return bool(self.report.get("passed"))

    def summary(self) -> dict:
        c, d, s = self.junction
        return {
            "ell_star": self.ell_star,
            "junction": {"c": c, "d": d, "s": s, "gap": d - s},
            "T_max": float(self.trajectory.end),
            "x_T_max": float(self.trajectory.x[-1]),
            "anchors": self.anchors,
            "roots": [list(r) for r in self.roots],
            "halfline": self.halfline.to_dict(),
            "report": self.report,
            "stability": self.stability,
        }

    def to_json(self) -> str:
        return json.dumps(_jsonable(self.summary()), sort_keys=True, indent=2)

    def to_csv(self, dest=None) -> str:
        return self.trajectory.to_csv(dest)


def _jsonable(o):
    if isinstance(o, dict):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, (bool, np.bool_)):
        return bool(o)
    if isinstance(o, (int, np.integer)):
        return int(o)
    if isinstance(o, (float, np.floating)):
        v = float(o)
        return float("%.17g" % v) if math.isfinite(v) else str(v)
    return o


def _merge(left: Trajectory, right: Trajectory) -> Trajectory:
    return Trajectory.concatenate([left, right])


def solve_bvp(
    spec: ProblemSpec,
    n: int = 32,
    ell_hi: float = 1e4,
    smap: Optional[SlopeMap] = None,
    workers: int = 1,
    check: bool = True,
    stability: bool = False,
) -> GlobalSolution:
    """Global solution on ``[0, T_max]`` from a root of the gap along the shooting section.

    Every sign change of the gap is polished with Brent's method; the
    returned solution is the root with the largest ``c`` and carries the
    others in ``roots``.  With ``check`` a failing verification raises
    VerificationFailed (the solution is attached).
    """
    Fhat = truncation(spec, ell_hi)
    anchors = {}
    try:
        d2 = find_delta2(spec, ell_hi, Fhat)
        anchors["delta2"] = d2.ell
    except Exception as exc:
        d2 = None
        anchors["delta2_error"] = str(exc)
    try:
        d1 = find_delta1(spec, ell_hi, Fhat)
        anchors["delta1"] = d1.ell
    except Exception as exc:
        d1 = None
        anchors["delta1_error"] = str(exc)
    found = [r.ell for r in (d1, d2) if r is not None]
    if not found:
        raise NoSignChange("neither anchor of the shooting section exists; " + "; ".join(
            v for k, v in anchors.items() if k.endswith("error")))
    if len(found) == 1:
        anchors["note"] = "one anchor missing; the section is taken around the other"
    beta, alpha = min(found), max(found)
    section = cross_section(spec, beta, alpha, n, Fhat, workers=workers)
    smap = SlopeMap(spec) if smap is None else smap
    curve = build_match_curve(spec, section, smap, workers)
    changes = curve.sign_changes()
    if not changes:
        raise NoSignChange("the gap d - s(c) has no sign change along the section", curve)

    cmax = float(np.max(np.abs(section.x1))) or 1.0

    def evaluate(ell):
        tr = solve_cauchy(spec, Fhat, ell)
        c = float(tr.y[-1, 0])
        d = float(tr.y[-1, 1] / spec.a(1.0))
        s, _ = _slope(smap, max(c, 0.0), cmax)
        return tr, c, d, s

    def gap(ell):
        _, c, d, s = evaluate(ell)
        return d - s

    roots = []
    for i, j in changes:
        lo, hi = curve.ell[i], curve.ell[j]
        if curve.gap[i] == 0:
            ell = lo
        else:
            ell = brentq(gap, lo, hi, xtol=1e-13 * hi, rtol=1e-13, maxiter=100)
        tr, c, d, s = evaluate(ell)
        if c > C_LIMIT * cmax:
            roots.append((ell, c, d, s, tr))
    if not roots:
        raise NoSignChange("gap sign changes only at c = 0", curve)
    ell, c, d, s, left = max(roots, key=lambda r: r[1])
    hs = smap.solution(c)
    right = hs.trajectory
    sol = GlobalSolution(
        ell,
        (c, d, s),
        _merge(left, right),
        left,
        right,
        hs,
        curve=curve,
        section=section,
        anchors=anchors,
        roots=[r[:4] for r in sorted(roots, key=lambda r: -r[1])],
    )
    sol.report = verify(sol, spec)
    if stability:
        sol.stability = stability_check(sol, spec, n=n, ell_hi=ell_hi)
        sol.report["stability"] = sol.stability["passed"]
        sol.report["passed"] = sol.report["passed"] and sol.stability["passed"]
    if check and not sol.passed:
        failed = [k for k, v in sol.report.items() if isinstance(v, dict) and not v.get("passed", True)]
        raise VerificationFailed(f"verification failed: {', '.join(failed)}", sol)
    return sol


# ------------------------------------------------------------ verification


def verify(sol: GlobalSolution, spec: ProblemSpec, tol: float = 1e-7, delta: float = DELTA, n: int = 1000) -> dict:
    """Every check recomputed from the stored trajectories alone."""
    tr = sol.trajectory
    t0, T = tr.start, tr.end
    dense = np.unique(np.concatenate([tr.t, np.linspace(t0, T, 20001), np.linspace(t0, min(1.0, T), 2001)]))
    xs = tr(dense)[:, 0]
    scale = float(np.max(np.abs(xs))) or 1.0
    rep = {}

    x0 = float(tr(t0)[0])
    rep["boundary"] = {"t0": t0, "x0": x0, "passed": t0 == 0.0 and abs(x0) <= tol}

    mask = dense > delta
    xmin = float(np.min(xs[mask]))
    rep["positivity"] = {"delta": delta, "min_x": xmin, "margin": xmin / scale, "passed": xmin > 0}

    k = int(np.argmax(xs))
    tmax = float(dense[k])
    rep["local_max"] = {"t": tmax, "x": float(xs[k]), "passed": 0.0 < tmax <= 1.0}

    on = dense >= 1.0
    rise = float(np.max(np.diff(xs[on]), initial=0.0))
    rep["monotone"] = {"max_increase": rise, "slack": tol * scale, "passed": rise <= tol * scale}

    L, R = sol.left, sol.right
    xl, pl = (float(v) for v in L.y[-1])
    xr, pr = (float(v) for v in R.y[0])
    jx, jp = abs(xl - xr), abs(pl - pr)
    rep["junction"] = {
        "t_left": float(L.end),
        "t_right": float(R.start),
        "dx": jx,
        "dp": jp,
        "passed": abs(L.end - R.start) <= 1e-12 and jx <= tol and jp <= tol,
    }

    try:
        cl = classify(LinearEq(spec.a, lambda t: 0.0), R, R.end)
        rep["int"] = {"verdict": cl.verdict, "ratios": [float(r) for r in cl.ratios], "passed": cl.verdict == "principal"}
    except Exception as exc:
        rep["int"] = {"verdict": "error", "detail": str(exc), "passed": False}

    # per piece: a p-jump at t = 1 is the junction check's business, not a defect of the equation
    res = max(eq1_residual(L, spec, n=max(n // 10, 10)), eq1_residual(R, spec, n=n))
    lim = 10.0 * spec.ode_tol
    rep["residual"] = {"value": res, "limit": lim, "points": n, "passed": res <= lim}

    rep["passed"] = all(v["passed"] for v in rep.values() if isinstance(v, dict))
    return rep


def stability_check(sol: GlobalSolution, spec: ProblemSpec, n: int = 32, ell_hi: float = 1e4, tol: Optional[float] = None) -> dict:
    """Re-solve with the span ``T_max - 1`` doubled and compare on ``[0, T_max / 2]``.

    The root is re-polished from a bracket around the original slope; a full
    solve is the fallback if that bracket does not change sign.
    """
    tol = spec.tol if tol is None else tol
    T2 = 1.0 + 2.0 * (spec.T_max - 1.0)
    spec2 = spec.replace(T_max=T2)
    smap = SlopeMap(spec2)
    Fhat = truncation(spec2, ell_hi)
    cmax = abs(sol.junction[0]) * 10

    def gap(ell):
        tr = solve_cauchy(spec2, Fhat, ell)
        c = float(tr.y[-1, 0])
        d = float(tr.y[-1, 1] / spec2.a(1.0))
        return d - _slope(smap, max(c, 0.0), cmax)[0]

    ell0 = sol.ell_star
    how = "re-polished"
    ell2 = None
    g0 = gap(ell0)
    for w in (1e-6, 1e-4, 1e-2):
        # step towards the root using the sign of the gap (it decreases in ell)
        other = ell0 * (1 + w) if g0 > 0 else ell0 * (1 - w)
        g1 = gap(other)
        if g0 == 0:
            ell2 = ell0
            break
        if g0 * g1 <= 0:
            lo, hi = sorted((ell0, other))
            ell2 = brentq(gap, lo, hi, xtol=1e-12 * hi, rtol=1e-12, maxiter=100)
            break
    if ell2 is None:
        how = "full solve"
        other = solve_bvp(spec2, n=n, ell_hi=ell_hi, smap=smap, check=False)
        ell2, merged = other.ell_star, other.trajectory
    else:
        left = solve_cauchy(spec2, Fhat, ell2)
        right = smap.solution(float(left.y[-1, 0])).trajectory
        merged = _merge(left, right)
    hi = spec.T_max / 2.0
    ts = np.unique(np.concatenate([sol.trajectory.t[sol.trajectory.t <= hi], np.linspace(0.0, hi, 5001)]))
    a = sol.trajectory(ts)[:, 0]
    b = merged(ts)[:, 0]
    scale = float(np.max(np.abs(a))) or 1.0
    diff = float(np.max(np.abs(a - b)))
    return {
        "T_max_doubled": T2,
        "compare_until": hi,
        "ell_star": ell0,
        "ell_star_doubled": float(ell2),
        "max_diff": diff,
        "limit": 10.0 * tol * scale,
        "method": how,
        "passed": diff <= 10.0 * tol * scale,
    }
