"""Problem files (INI) and the built-in catalog.

Grammar of a problem file (sections and keys; values of ``expr`` type use the
expression language of :mod:`halfline_bvp.exprfn`)::

    file          := section*
    [meta]          name = text ; notes = text
    [coefficients]  a = expr ; b = expr ; b1 = expr (optional) ; B = expr (constant)
                    a_singularities = sing (";" sing)*      sing := point "," half_width "," expr
                    a_tail = "power" rate | "exp" rate | "flag"
    [nonlinearity]  kind = "catalog" | "expression" | "linear"
                    k0 = expr ; kinf = expr ; K = expr (default 1)
                    F = expr ; dF = expr                     (kind = expression, variable t stands for u)
    [numerics]      T_max = number ; tol = number ; ode_tol = number
                    grid = int ; samples = int ; section = int

``kind = linear`` is F(u) = u; it is refused unless the caller enables the
linear test hook.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .conditions import (
    ProblemSpec,
    TailCertificate,
    catalog_nonlinearity,
    expression_nonlinearity,
    linear_nonlinearity,
)
from .exprfn import ParseError, ScalarField, evaluate, parse

__all__ = ["ProblemFile", "ProblemFileError", "load_problem", "parse_problem", "CATALOG", "catalog_names", "catalog_text"]


class ProblemFileError(ValueError):
    pass


@dataclass
class ProblemFile:
    name: str
    a: ScalarField
    b: ScalarField
    b1: Optional[ScalarField]
    B: float
    tail: TailCertificate
    kind: str
    k0: float
    kinf: float
    K: float
    F_text: str = ""
    dF_text: str = ""
    T_max: float = 513.0
    tol: float = 1e-7
    ode_tol: float = 1e-10
    grid: int = 32
    samples: int = 400
    section: int = 32
    notes: str = ""
    text: str = ""
    extras: dict = field(default_factory=dict)

    def nonlinearity(self, linear_hook: bool = False):
        if self.kind == "catalog":
            return catalog_nonlinearity(self.k0, self.kinf, self.K)
        if self.kind == "expression":
            return expression_nonlinearity(self.F_text, self.dF_text, self.k0, self.kinf, self.K)
        if self.kind == "linear":
            if not linear_hook:
                raise ProblemFileError("F(u) = u violates k0 != kinf; enable the linear test hook to use it")
            return linear_nonlinearity()
        raise ProblemFileError(f"unknown nonlinearity kind {self.kind!r}")

    def to_spec(self, linear_hook: bool = False, perturbed: bool = True, **overrides) -> ProblemSpec:
        """ProblemSpec for the solver; with ``perturbed`` the weight is ``b + b1``."""
        b = self.b + self.b1 if (perturbed and self.b1 is not None) else self.b
        kw = dict(
            a=self.a,
            b=b,
            F=self.nonlinearity(linear_hook),
            B=self.B,
            T_max=self.T_max,
            tol=self.tol,
            ode_tol=self.ode_tol,
            tail=self.tail,
            name=self.name,
        )
        kw.update({k: v for k, v in overrides.items() if v is not None})
        return ProblemSpec(**kw)

    def base_spec(self, linear_hook: bool = False, **overrides) -> ProblemSpec:
        return self.to_spec(linear_hook, perturbed=False, **overrides)


def _const(text: str, what: str) -> float:
    try:
        return float(evaluate(parse(text), 0.0))
    except (ParseError, ArithmeticError, ValueError) as exc:
        raise ProblemFileError(f"{what}: {exc}") from exc


def _field(text: str, what: str, sings=()) -> ScalarField:
    try:
        return ScalarField.from_text(text, 0.0, math.inf, sings)
    except ParseError as exc:
        raise ProblemFileError(f"{what}: {exc}") from exc


def _sings(text: str):
    out = []
    for item in filter(None, (s.strip() for s in text.split(";"))):
        parts = [p.strip() for p in item.split(",", 2)]
        if len(parts) != 3:
            raise ProblemFileError(f"singularity needs 'point, half_width, replacement': {item!r}")
        out.append((_const(parts[0], "singularity point"), _const(parts[1], "singularity half-width"), parts[2]))
    return out


def _tail(text: str) -> TailCertificate:
    parts = text.split()
    if not parts:
        raise ProblemFileError("empty a_tail")
    kind = parts[0]
    if kind == "flag":
        return TailCertificate("flag")
    if kind in ("power", "exp") and len(parts) == 2:
        return TailCertificate(kind, _const(parts[1], "tail rate"))
    raise ProblemFileError(f"a_tail must be 'power RATE', 'exp RATE' or 'flag', got {text!r}")


def parse_problem(text: str, default_name: str = "problem") -> ProblemFile:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ProblemFileError(f"malformed problem file: {exc}") from exc
    for sec in ("coefficients", "nonlinearity"):
        if not cp.has_section(sec):
            raise ProblemFileError(f"missing section [{sec}]")
    co, nl = cp["coefficients"], cp["nonlinearity"]
    num = cp["numerics"] if cp.has_section("numerics") else {}
    meta = cp["meta"] if cp.has_section("meta") else {}
    for key in ("a", "b", "B"):
        if key not in co:
            raise ProblemFileError(f"[coefficients] needs '{key}'")
    a = _field(co["a"], "a", _sings(co.get("a_singularities", "")))
    b = _field(co["b"], "b")
    b1 = _field(co["b1"], "b1") if co.get("b1", "").strip() else None
    kind = nl.get("kind", "catalog").strip()
    if kind == "linear":
        k0 = kinf = K = 1.0
    else:
        for key in ("k0", "kinf"):
            if key not in nl:
                raise ProblemFileError(f"[nonlinearity] needs '{key}'")
        k0, kinf = _const(nl["k0"], "k0"), _const(nl["kinf"], "kinf")
        K = _const(nl.get("K", "1"), "K")
    F_text = nl.get("F", "")
    dF_text = nl.get("dF", "")
    if kind == "expression":
        if not F_text or not dF_text:
            raise ProblemFileError("expression nonlinearity needs F and dF")
        for t, what in ((F_text, "F"), (dF_text, "dF")):
            try:
                parse(t)
            except ParseError as exc:
                raise ProblemFileError(f"{what}: {exc}") from exc
    elif kind not in ("catalog", "linear"):
        raise ProblemFileError(f"unknown nonlinearity kind {kind!r}")
    try:
        pf = ProblemFile(
            name=meta.get("name", default_name),
            a=a,
            b=b,
            b1=b1,
            B=_const(co["B"], "B"),
            tail=_tail(co.get("a_tail", "flag")),
            kind=kind,
            k0=k0,
            kinf=kinf,
            K=K,
            F_text=F_text,
            dF_text=dF_text,
            T_max=float(num.get("T_max", 513)),
            tol=float(num.get("tol", 1e-7)),
            ode_tol=float(num.get("ode_tol", 1e-10)),
            grid=int(num.get("grid", 32)),
            samples=int(num.get("samples", 400)),
            section=int(num.get("section", 32)),
            notes=meta.get("notes", ""),
            text=text,
        )
    except ValueError as exc:
        raise ProblemFileError(f"bad numeric value: {exc}") from exc
    if kind != "linear" and k0 == kinf:
        raise ProblemFileError("k0 must differ from kinf")
    return pf


def load_problem(ref: str) -> ProblemFile:
    """A catalog name or a path to a problem file."""
    if ref in CATALOG:
        return parse_problem(CATALOG[ref], ref)
    p = Path(ref)
    if not p.exists():
        raise ProblemFileError(f"no catalog entry or file named {ref!r} (catalog: {', '.join(catalog_names())})")
    return parse_problem(p.read_text(), p.stem)


# ------------------------------------------------------------------ catalog

_EXAMPLE2_COEF = """\
a = (1+t)^2
a_tail = power 2
b = (1/(5*e))*exp(16/(1+16*t^4))*cos(pi*t/2)
# b <= e^(16/1297)/(5e) < 0.0745 on [3, inf) and b <= 0 on [1, 3]
B = 0.075
"""

CATALOG = {
    "example1": """\
[meta]
name = example1
notes = linear equation (a y')' + y = 0 whose principal solution is t exp(-t); its dual is not disconjugate on [0, inf)

[coefficients]
a = (1+t-2*exp(t-1))/(1-t)
a_singularities = 1, 1e-4, 1 + (t-1) + (t-1)^2/3 + (t-1)^3/12
a_tail = exp 1
b = 1
B = 1

[nonlinearity]
kind = linear

[numerics]
T_max = 40
tol = 1e-7
ode_tol = 1e-11
""",
    "example2": f"""\
[meta]
name = example2
notes = indefinite weight with a = (1+t)^2; F interpolates k0 = 9 e^-15 and kinf = 1

[coefficients]
{_EXAMPLE2_COEF}
[nonlinearity]
kind = catalog
k0 = 9*exp(-15)
kinf = 1
K = 1

[numerics]
T_max = 513
tol = 1e-7
ode_tol = 1e-10
grid = 32
section = 32
""",
    "example2-perturbed": f"""\
[meta]
name = example2-perturbed
notes = example2 with the nonpositive perturbation b1 = (e - e^t)(|cos t| - cos t), zero on [0, 1]

[coefficients]
{_EXAMPLE2_COEF}b1 = (e-exp(t))*(abs(cos(t))-cos(t))

[nonlinearity]
kind = catalog
k0 = 9*exp(-15)
kinf = 1
K = 1

[numerics]
T_max = 20
tol = 1e-7
ode_tol = 1e-10
grid = 32
section = 32
""",
    "example3": """\
[meta]
name = example3
notes = (e^(2t) x')' + e^(2t) x = 0; e^-t is principal, t e^-t is not and satisfies x(0) = 0

[coefficients]
a = exp(2*t)
a_tail = exp 2
b = exp(2*t)
B = exp(2*81)

[nonlinearity]
kind = linear

[numerics]
T_max = 65
tol = 1e-8
ode_tol = 1e-11
section = 32
""",
    "euler-dual": """\
[meta]
name = euler-dual
notes = Euler-type majorant with B = 1/4, the borderline disconjugate case of v'' + v/(4(1+t)^2) = 0

[coefficients]
a = (1+t)^2
a_tail = power 2
b = 1/4
B = 1/4

[nonlinearity]
kind = catalog
k0 = 9*exp(-15)
kinf = 1

[numerics]
T_max = 1000
""",
}


def catalog_names() -> list:
    return sorted(CATALOG)


def catalog_text(name: str) -> str:
    if name not in CATALOG:
        raise ProblemFileError(f"unknown catalog entry {name!r}")
    return CATALOG[name]
