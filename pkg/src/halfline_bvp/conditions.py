"""Problem model and checks of the standing assumptions and existence conditions.

A problem instance bundles the coefficients ``a``, ``b`` of
``(a x')' + b F(x) = 0`` with the nonlinearity ``F`` and the numeric horizon.
The checks here are finite-sample verdicts; asymptotic hypotheses are
handled through declared certificates and consistency fits.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq, minimize, minimize_scalar

from .odeint import A_of, QuadratureError, dopri5, quad, weight_l1

__all__ = [
    "Nonlinearity",
    "TailCertificate",
    "ProblemSpec",
    "Verdict",
    "ConditionReport",
    "UnusableWindow",
    "NotApplicable",
    "catalog_nonlinearity",
    "linear_nonlinearity",
    "expression_nonlinearity",
    "verify_assumptions",
    "check_A1_A2",
    "rho",
    "search_window",
    "check_positive_weight",
    "check_perturbation",
    "tau_transform",
    "TauTransform",
    "full_check",
]

QUAD_TOL = 1e-12


class UnusableWindow(ValueError):
    """The window (t1, t2) carries no positive weight."""


class NotApplicable(ValueError):
    """A criterion whose precondition fails on this problem."""


# ------------------------------------------------------------ nonlinearity


@dataclass(frozen=True)
class Nonlinearity:
    """``F`` with its derivative and declared limits ``F(u)/u -> k0`` (u -> 0+), ``-> kinf`` (u -> inf)."""

    F: Callable[[float], float]
    dF: Callable[[float], float]
    k0: float
    kinf: float
    K: float = 1.0
    name: str = ""
    quotient_fn: Optional[Callable[[float], float]] = None
    linear_hook: bool = False

    def __post_init__(self):
        if self.k0 == self.kinf and not self.linear_hook:
            raise ValueError("k0 must differ from kinf (linear F is only available through the test hook)")

    def quotient(self, v: float) -> float:
        """``F(v)/v`` for ``v > 0`` and ``k0`` at ``v = 0``."""
        if self.quotient_fn is not None:
            return self.quotient_fn(v)
        if v <= 0.0:
            return self.k0
        return self.F(v) / v


def catalog_nonlinearity(k0: float, kinf: float, K: float = 1.0) -> Nonlinearity:
    """``F(u) = kinf u + (k0 - kinf)(1 - exp(-u))`` for ``u >= 0``, extended as an odd function."""
    d = k0 - kinf

    def F(u):
        if u < 0:
            return -F(-u)
        return kinf * u - d * math.expm1(-u)

    def dF(u):
        return kinf + d * math.exp(-abs(u))

    def quotient(v):
        if v <= 0.0:
            return k0
        if v < 1e-8:
            return kinf + d * (1.0 - 0.5 * v)
        return kinf - d * math.expm1(-v) / v

    return Nonlinearity(F, dF, k0, kinf, K, name=f"catalog(k0={k0!r}, kinf={kinf!r})", quotient_fn=quotient)


def linear_nonlinearity() -> Nonlinearity:
    """``F(u) = u``; violates ``k0 != kinf`` and exists only for oracle tests."""
    return Nonlinearity(
        lambda u: u, lambda u: 1.0, 1.0, 1.0, 1.0, name="linear-hook", quotient_fn=lambda v: 1.0, linear_hook=True
    )


def expression_nonlinearity(F_text: str, dF_text: str, k0: float, kinf: float, K: float = 1.0) -> Nonlinearity:
    """Nonlinearity from two expressions in the variable ``t`` (standing for u)."""
    from .exprfn import compile_expr, parse

    f = compile_expr(parse(F_text))
    df = compile_expr(parse(dF_text))

    def F(u):
        return f(u) if u >= 0 else -f(-u)

    def dF(u):
        return df(abs(u))

    return Nonlinearity(F, dF, k0, kinf, K, name=f"F(u)={F_text}")


# ---------------------------------------------------------------- problem


@dataclass(frozen=True)
class TailCertificate:
    """Declared decay of ``1/a``: ``"power"`` (~ t^-rate, rate > 1), ``"exp"`` (~ e^-rate t)
    or ``"flag"`` (integrability asserted without a numeric check)."""

    kind: str = "flag"
    rate: float = math.nan

    def tail_integral(self, a: Callable[[float], float], T: float) -> float:
        """Estimated ``integral_T^inf ds / a(s)`` under the declared decay."""
        if self.kind == "power":
            return T / (a(T) * (self.rate - 1.0))
        if self.kind == "exp":
            return 1.0 / (a(T) * self.rate)
        return math.nan


@dataclass(frozen=True)
class ProblemSpec:
    a: Callable[[float], float]
    b: Callable[[float], float]
    F: Nonlinearity
    B: float
    T_max: float = 512.0
    tol: float = 1e-7
    ode_tol: float = 1e-10
    tail: TailCertificate = field(default_factory=TailCertificate)
    name: str = ""

    @property
    def K(self) -> float:
        return self.F.K

    @property
    def k0(self) -> float:
        return self.F.k0

    @property
    def kinf(self) -> float:
        return self.F.kinf

    @property
    def kmin(self) -> float:
        return min(self.F.k0, self.F.kinf)

    @property
    def kmax(self) -> float:
        return max(self.F.k0, self.F.kinf)

    @property
    def linear_hook(self) -> bool:
        return self.F.linear_hook

    def replace(self, **changes) -> "ProblemSpec":
        from dataclasses import replace

        return replace(self, **changes)


# ---------------------------------------------------------------- reports


@dataclass
class Verdict:
    passed: bool
    worst_t: Optional[float] = None
    worst_value: Optional[float] = None
    detail: str = ""


@dataclass
class ConditionReport:
    window: tuple
    A1_lhs: float
    A2_lhs: float
    A2_rhs: float
    A1_margin: float
    A2_margin: float
    A1_pass: bool
    A2_pass: bool
    b_l1: float
    A1_value: float
    assumption_verdicts: Optional[dict] = None
    disconjugacy: Optional[dict] = None
    positive_weight: Optional[dict] = None
    notes: list = field(default_factory=list)

    @property
    def overall(self) -> bool:
        ok = self.A1_pass and self.A2_pass
        if self.assumption_verdicts is not None:
            ok = ok and all(v.passed for v in self.assumption_verdicts.values())
        if self.disconjugacy is not None:
            ok = ok and self.disconjugacy.get("status") == "disconjugate"
        return ok

    def to_dict(self) -> dict:
        d = {
            "window": [float(self.window[0]), float(self.window[1])],
            "A1_lhs": self.A1_lhs,
            "A2_lhs": self.A2_lhs,
            "A2_rhs": self.A2_rhs,
            "A1_margin": self.A1_margin,
            "A2_margin": self.A2_margin,
            "A1_pass": self.A1_pass,
            "A2_pass": self.A2_pass,
            "b_l1": self.b_l1,
            "A_1": self.A1_value,
            "assumptions": None
            if self.assumption_verdicts is None
            else {k: asdict(v) for k, v in self.assumption_verdicts.items()},
            "disconjugacy": self.disconjugacy,
            "positive_weight": self.positive_weight,
            "notes": list(self.notes),
            "overall": self.overall,
        }
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, default=_json_float)


def _json_float(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.bool_):
        return bool(v)
    raise TypeError(f"not serializable: {type(v)}")


# ------------------------------------------------------------- assumptions


def _vec(f, ts):
    v = getattr(f, "vector", None)
    if v is not None:
        return v(ts)
    return np.array([f(t) for t in ts])


def verify_assumptions(spec: ProblemSpec, samples: int = 400) -> dict:
    """Sampled verdicts for hypotheses (i)-(iii); failures are verdicts, never exceptions."""
    if samples < 100:
        raise ValueError("samples must be >= 100")
    out: dict[str, Verdict] = {}
    T = spec.T_max

    # (i) positivity and integrability of 1/a
    ts = np.unique(np.concatenate([np.linspace(0, 1, samples), np.geomspace(1, T, samples), np.linspace(1, T, samples)]))
    try:
        av = _vec(spec.a, ts)
        i = int(np.argmin(av))
        out["a_positive"] = Verdict(bool(av[i] > 0), float(ts[i]), float(av[i]), "min of a on [0, T_max]")
    except ArithmeticError as exc:
        out["a_positive"] = Verdict(False, detail=f"a not evaluable: {exc}")
    out["a_integrable"] = _check_tail(spec)

    # (ii) b on [0, 1] and the bound B on [1, T_max]
    t01 = np.linspace(0, 1, max(samples, 1001))
    bv = _vec(spec.b, t01)
    i = int(np.argmin(bv))
    out["b_nonnegative_01"] = Verdict(bool(bv[i] >= 0), float(t01[i]), float(bv[i]), "min of b on [0, 1]")
    j = int(np.argmax(bv))
    out["b_nontrivial_01"] = Verdict(bool(bv[j] > 0), float(t01[j]), float(bv[j]), "max of b on [0, 1]")
    n_hi = int(min(max(samples, 16 * T), 200_000))
    t1T = np.linspace(1, T, n_hi)
    try:
        bh = _vec(spec.b, t1T)
        j = int(np.argmax(bh))
        out["b_bounded_above"] = Verdict(bool(bh[j] <= spec.B), float(t1T[j]), float(bh[j]), f"max of b on [1, T_max] vs B={spec.B}")
    except ArithmeticError as exc:
        out["b_bounded_above"] = Verdict(False, detail=f"b not evaluable: {exc}")
    out["B_positive"] = Verdict(spec.B > 0, detail=f"B={spec.B}")

    # (iii) nonlinearity
    F = spec.F
    u = np.geomspace(1e-6, 1e6, samples)
    uu = np.concatenate([-u[::-1], u])
    Fv = np.array([F.F(x) for x in uu])
    prod = Fv * uu
    i = int(np.argmin(prod))
    out["F_sign"] = Verdict(bool(prod[i] > 0), float(uu[i]), float(prod[i]), "min of F(u) u")
    out["F_zero"] = Verdict(F.F(0.0) == 0.0, 0.0, float(F.F(0.0)))
    ug = np.concatenate([[0.0], u])
    dv = np.array([F.dF(x) for x in ug])
    bad = (dv < 0) | (dv > F.K * (1 + 1e-12))
    k = int(np.argmax(bad)) if bad.any() else int(np.argmax(dv))
    out["dF_bounded"] = Verdict(not bad.any(), float(ug[k]), float(dv[k]), f"0 <= dF <= K={F.K}")
    h = 1e-6 * np.maximum(u, 1e-3)
    fd = np.array([(F.F(x + hh) - F.F(x - hh)) / (2 * hh) for x, hh in zip(u, h)])
    dfu = np.array([F.dF(x) for x in u])
    rel = np.abs(fd - dfu) / (1e-6 + np.abs(dfu) + np.abs(fd))
    k = int(np.argmax(rel))
    out["dF_consistent"] = Verdict(bool(rel[k] < 1e-4), float(u[k]), float(rel[k]), "finite difference of F vs dF")
    lim_tol = 0.05 * F.K
    r0 = F.F(1e-6) / 1e-6
    rinf = F.F(1e6) / 1e6
    out["k0_limit"] = Verdict(abs(r0 - F.k0) <= lim_tol, 1e-6, r0, f"F(u)/u at u=1e-6 vs k0={F.k0}")
    out["kinf_limit"] = Verdict(abs(rinf - F.kinf) <= lim_tol, 1e6, rinf, f"F(u)/u at u=1e6 vs kinf={F.kinf}")
    distinct = F.k0 != F.kinf
    out["k0_ne_kinf"] = Verdict(
        distinct or F.linear_hook,
        detail="linear test hook: k0 = kinf waived" if (F.linear_hook and not distinct) else f"k0={F.k0}, kinf={F.kinf}",
    )
    out["k_le_K"] = Verdict(0 <= F.k0 <= F.K and 0 <= F.kinf <= F.K, detail=f"0 <= k0, kinf <= K={F.K}")
    return out


def _check_tail(spec: ProblemSpec) -> Verdict:
    T = spec.T_max
    try:
        total = quad(lambda s: 1.0 / spec.a(s), 0.0, T, 1e-10)
    except (QuadratureError, ArithmeticError) as exc:
        return Verdict(False, detail=f"integral of 1/a on [0, T_max] failed: {exc}")
    cert = spec.tail
    if cert.kind == "flag":
        return Verdict(True, T, total, "integrable tail asserted by certificate flag")
    ts = np.linspace(T / 2, T, 64)
    with np.errstate(all="ignore"):
        inv = np.log(1.0 / _vec(spec.a, ts))
    if cert.kind == "power":
        slope = np.polyfit(np.log(ts), inv, 1)[0]
        ok = cert.rate > 1 and abs(-slope - cert.rate) <= 0.1 * cert.rate
        return Verdict(bool(ok), T, float(-slope), f"fitted power decay of 1/a vs declared {cert.rate}")
    if cert.kind == "exp":
        slope = np.polyfit(ts, inv, 1)[0]
        ok = cert.rate > 0 and abs(-slope - cert.rate) <= 0.1 * cert.rate
        return Verdict(bool(ok), T, float(-slope), f"fitted exponential decay of 1/a vs declared {cert.rate}")
    return Verdict(False, detail=f"unknown tail certificate {cert.kind!r}")


# ---------------------------------------------------------- A1, A2, windows


def _strict(margin: float, qtol: float) -> bool:
    return margin > 10 * qtol


def check_A1_A2(spec: ProblemSpec, t1: float, t2: float, qtol: float = QUAD_TOL) -> ConditionReport:
    """Evaluate both existence inequalities for the window ``(t1, t2)``."""
    if not (0 < t1 < t2 < 1):
        raise ValueError(f"need 0 < t1 < t2 < 1, got ({t1}, {t2})")
    wb = quad(spec.b, t1, t2, qtol)
    if not wb > 0:
        raise UnusableWindow(f"integral of b over ({t1}, {t2}) is {wb!r} <= 0")
    A1 = A_of(spec.a, 1.0, qtol)
    At1 = A_of(spec.a, t1, qtol)
    At2 = A_of(spec.a, t2, qtol)
    bl = weight_l1(spec.b, qtol)
    a1_lhs = spec.kmin * A1 * bl
    a2_lhs = spec.kmax * wb
    a2_rhs = A1 / (At1 * (A1 - At2))
    m1 = 1.0 - a1_lhs
    m2 = a2_lhs - a2_rhs
    # margins compared against the quadrature error scaled to each quantity
    return ConditionReport(
        window=(t1, t2),
        A1_lhs=a1_lhs,
        A2_lhs=a2_lhs,
        A2_rhs=a2_rhs,
        A1_margin=m1,
        A2_margin=m2,
        A1_pass=_strict(m1, qtol * max(1.0, a1_lhs)),
        A2_pass=_strict(m2, qtol * max(1.0, a2_lhs, a2_rhs)),
        b_l1=bl,
        A1_value=A1,
    )


def rho(t1: float, t2: float) -> float:
    """``t1 (1 - t2) (t2 - t1)``."""
    if not (0 <= t1 <= t2 <= 1):
        raise ValueError("need 0 <= t1 <= t2 <= 1")
    return t1 * (1 - t2) * (t2 - t1)


def _cumulative(f, grid, tol):
    vals = [0.0]
    for lo, hi in zip(grid[:-1], grid[1:]):
        vals.append(vals[-1] + quad(f, lo, hi, tol))
    return np.array(vals)


def search_window(spec: ProblemSpec, grid: int = 32, qtol: float = QUAD_TOL):
    """Best window for (A2): coarse grid over ``0 < t1 < t2 < 1`` then a Nelder-Mead polish.

    The objective is the ratio of the two sides of (A2),
    ``kmax * int_{t1}^{t2} b * A(t1) (A(1) - A(t2)) / A(1)``, which for
    constant ``b`` and ``a`` reduces to a multiple of ``rho``.
    Returns ``(t1, t2, report)``.
    """
    if grid < 16:
        raise ValueError("grid must be >= 16")
    g = np.linspace(0.0, 1.0, grid + 1)
    Bc = _cumulative(spec.b, g, qtol)
    Ac = _cumulative(lambda s: 1.0 / spec.a(s), g, qtol)
    A1 = Ac[-1]
    best, arg = -np.inf, None
    for i in range(1, grid):
        for j in range(i + 1, grid):
            wb = Bc[j] - Bc[i]
            if wb <= 0:
                continue
            r = spec.kmax * wb * Ac[i] * (A1 - Ac[j]) / A1
            if r > best:
                best, arg = r, (g[i], g[j])
    if arg is None:
        raise UnusableWindow("no window with positive weight on the search grid")

    def neg_log_ratio(z):
        t1, t2 = z
        if not (0 < t1 < t2 < 1):
            return 1e30
        wb = quad(spec.b, t1, t2, qtol)
        if wb <= 0:
            return 1e30
        at1 = A_of(spec.a, t1, qtol)
        at2 = A1 - quad(lambda s: 1.0 / spec.a(s), t2, 1.0, qtol)
        return -math.log(spec.kmax * wb * at1 * (A1 - at2) / A1) if spec.kmax > 0 else 1e30

    eps = 1e-9
    res = minimize(
        neg_log_ratio,
        np.array(arg),
        method="Nelder-Mead",
        bounds=[(eps, 1 - eps), (eps, 1 - eps)],
        options={"xatol": 1e-11, "fatol": 1e-15, "maxiter": 4000, "initial_simplex": _simplex(arg, 0.5 / grid)},
    )
    t1, t2 = (float(v) for v in res.x) if res.fun < neg_log_ratio(arg) else arg
    report = check_A1_A2(spec, t1, t2, qtol)
    return t1, t2, report


def _simplex(x, d):
    x = np.asarray(x, dtype=float)
    return np.array([x, x + [d, 0], x + [0, d]])


def check_positive_weight(spec: ProblemSpec, samples: int = 4001, qtol: float = QUAD_TOL) -> dict:
    """Criterion for strictly positive ``b`` on [0, 1]: (A1) and ``kmax A(1) min b > 27``."""
    ts = np.linspace(0, 1, samples)
    bv = _vec(spec.b, ts)
    i = int(np.argmin(bv))
    lo, hi = ts[max(i - 1, 0)], ts[min(i + 1, samples - 1)]
    bmin = float(bv[i])
    if hi > lo:
        r = minimize_scalar(spec.b, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
        if r.success and r.fun < bmin:
            bmin = float(r.fun)
    if not bmin > 1e-12 * max(1.0, float(np.max(np.abs(bv)))):  # round-off zeros count as zeros
        raise NotApplicable(f"b is not positive on [0, 1] (min {bmin!r})")
    A1 = A_of(spec.a, 1.0, qtol)
    bl = weight_l1(spec.b, qtol)
    a1_lhs = spec.kmin * A1 * bl
    lhs27 = spec.kmax * A1 * bmin
    a1 = _strict(1.0 - a1_lhs, qtol * max(1.0, a1_lhs))
    c27 = _strict(lhs27 - 27.0, qtol * max(27.0, lhs27))
    return {
        "A1_lhs": a1_lhs,
        "A1_pass": a1,
        "min_b": bmin,
        "lhs_27": lhs27,
        "pass_27": c27,
        "passed": a1 and c27,
    }


def check_perturbation(spec: ProblemSpec, b1: Callable[[float], float], samples: int = 4000) -> Verdict:
    """Sign test on a perturbation ``b1``: identically zero on [0, 1], nonpositive beyond."""
    t01 = np.linspace(0, 1, samples)
    v01 = _vec(b1, t01)
    i = int(np.argmax(np.abs(v01)))
    if v01[i] != 0.0:
        return Verdict(False, float(t01[i]), float(v01[i]), "b1 is not identically zero on [0, 1]")
    tt = np.linspace(1, spec.T_max, int(min(max(samples, 16 * spec.T_max), 200_000)))[1:]
    try:
        vt = _vec(b1, tt)
    except ArithmeticError as exc:
        return Verdict(False, detail=f"b1 not evaluable on (1, T_max]: {exc}")
    j = int(np.argmax(vt))
    if vt[j] > 0:
        return Verdict(False, float(tt[j]), float(vt[j]), "b1 > 0 somewhere on (1, T_max]")
    return Verdict(True, float(tt[j]), float(vt[j]), "b1 = 0 on [0, 1] and b1 <= 0 on (1, T_max]")


# ------------------------------------------------------------ tau transform


class TauTransform:
    """Change of variable ``tau = A(t) / A(1)`` on [0, 1] and the transformed weight

    ``b~(tau) = A(1)^2 a(t(tau)) b(t(tau))``.
    """

    def __init__(self, spec: ProblemSpec, tol: float = 1e-13):
        self.spec = spec
        tr = dopri5(lambda t, y: np.array([1.0 / spec.a(t)]), 0.0, 1.0, [0.0], tol)
        self._A = tr.sampler(0)
        self.A1 = float(tr.y[-1, 0])

    def A(self, t: float) -> float:
        return self._A(t)

    def tau(self, t: float) -> float:
        return self._A(t) / self.A1

    def t_of(self, tau: float) -> float:
        if tau <= 0.0:
            return 0.0
        if tau >= 1.0:
            return 1.0
        target = tau * self.A1
        return brentq(lambda t: self._A(t) - target, 0.0, 1.0, xtol=1e-15, rtol=4 * np.finfo(float).eps)

    def btilde(self, tau: float) -> float:
        t = self.t_of(tau)
        return self.A1**2 * self.spec.a(t) * self.spec.b(t)

    __call__ = btilde


def tau_transform(spec: ProblemSpec) -> TauTransform:
    return TauTransform(spec)


# ----------------------------------------------------------- orchestration


def full_check(spec: ProblemSpec, window: Optional[tuple] = None, samples: int = 400, grid: int = 32) -> ConditionReport:
    """All hypotheses of the existence theorem: assumptions, (A1), (A2) and the dual disconjugacy."""
    from .linear_theory import is_disconjugate_dual_halfline

    verdicts = verify_assumptions(spec, samples)
    if window is None:
        try:
            _, _, report = search_window(spec, grid)
        except UnusableWindow:
            report = ConditionReport((math.nan, math.nan), math.nan, math.nan, math.nan, math.nan, math.nan, False, False, math.nan, math.nan)
            report.notes.append("no window with positive weight found")
    else:
        report = check_A1_A2(spec, *window)
    report.assumption_verdicts = verdicts
    dv = is_disconjugate_dual_halfline(spec.a, spec.B * spec.K, 1.0, spec.T_max, spec.ode_tol)
    report.disconjugacy = dv.to_dict()
    return report
