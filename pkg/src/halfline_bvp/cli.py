"""Command-line front end.

Exit codes: 0 verified pass, 1 checks failed, 2 usage or parse error,
3 solver non-convergence.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .conditions import NotApplicable, check_A1_A2, check_positive_weight, full_check
from .exprfn import ParseError, ScalarField
from .halfline import DisconjugacyNotCertified, NotConverged, SandwichViolation, SlopeMap
from .linear_theory import (
    LadderNotConverged,
    LinearEq,
    dual,
    is_disconjugate,
    is_disconjugate_dual_halfline,
    principal_solution,
)
from .matcher import NoSignChange, VerificationFailed, solve_bvp
from .problem import ProblemFileError, catalog_names, catalog_text, load_problem
from .shooting import NoBracket, RefinementCapExceeded

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NONCONV = 0, 1, 2, 3

NONCONVERGENCE = (
    NotConverged,
    LadderNotConverged,
    NoSignChange,
    NoBracket,
    RefinementCapExceeded,
    SandwichViolation,
    DisconjugacyNotCertified,
)


class UsageError(Exception):
    pass


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "pass" if v else "FAIL"
    if isinstance(v, (float, np.floating)):
        return "%.10g" % v
    return str(v)


def _dump(obj) -> str:
    def default(v):
        if isinstance(v, np.bool_):
            return bool(v)
        if isinstance(v, (np.floating, np.integer)):
            return v.item()
        raise TypeError(type(v))

    return json.dumps(obj, sort_keys=True, indent=2, default=default)


def _spec(args, problem):
    over = {"T_max": getattr(args, "Tmax", None), "tol": getattr(args, "tol", None)}
    return problem.to_spec(linear_hook=args.linear_hook, **over)


def _write(out: Path, name: str, text: str):
    out.mkdir(parents=True, exist_ok=True)
    with open(out / name, "w", newline="") as fh:
        fh.write(text)


# ------------------------------------------------------------------ check


def _check_report(args, problem):
    spec = _spec(args, problem)
    if args.variant == "positive-weight":
        try:
            res = check_positive_weight(spec)
        except NotApplicable as exc:
            return {"variant": "positive-weight", "status": "inapplicable", "detail": str(exc)}, False
        res = dict(res, variant="positive-weight", status="pass" if res["passed"] else "fail")
        return res, bool(res["passed"])
    window = tuple(args.window) if args.window else None
    if window is not None and not 0 <= window[0] < window[1] <= 1:
        raise UsageError("--window needs 0 <= t1 < t2 <= 1")
    report = full_check(spec, window, samples=problem.samples, grid=problem.grid)
    return report.to_dict(), report.overall


def _render_check(d: dict) -> str:
    if d.get("variant") == "positive-weight":
        return "\n".join(f"{k:>12}  {_fmt(v)}" for k, v in sorted(d.items()))
    lines = [f"window        ({_fmt(d['window'][0])}, {_fmt(d['window'][1])})"]
    for k in ("A1_lhs", "A1_margin", "A1_pass", "A2_lhs", "A2_rhs", "A2_margin", "A2_pass", "b_l1", "A_1"):
        lines.append(f"{k:<13} {_fmt(d[k])}")
    for name, v in sorted((d.get("assumptions") or {}).items()):
        extra = f"  worst t={_fmt(v['worst_t'])}" if v.get("worst_t") is not None else ""
        lines.append(f"assumption {name:<3} {_fmt(v['passed'])}{extra}  {v.get('detail', '')}".rstrip())
    dc = d.get("disconjugacy")
    if dc:
        lines.append(f"dual on [1, {_fmt(dc['T_max'])}]  {dc['status']}")
    for note in d.get("notes", []):
        lines.append(f"note: {note}")
    lines.append(f"overall       {_fmt(d['overall'])}")
    return "\n".join(lines)


def cmd_check(args) -> int:
    problem = load_problem(args.problem)
    d, ok = _check_report(args, problem)
    print(_dump(d) if args.json else _render_check(d))
    if args.out:
        _write(Path(args.out), "check.json", _dump(d) + "\n")
    return EXIT_OK if ok else EXIT_FAIL


# ------------------------------------------------------------------ solve


def cmd_solve(args) -> int:
    problem = load_problem(args.problem)
    spec = _spec(args, problem)
    if args.linear_hook:
        print("note: linear test hook; the existence-theorem check does not apply and is skipped", file=sys.stderr)
    elif not args.force:
        d, ok = _check_report(args, problem)
        if not ok:
            print(_render_check(d), file=sys.stderr)
            print("hypotheses not verified; use --force to solve anyway", file=sys.stderr)
            return EXIT_FAIL
    try:
        sol = solve_bvp(spec, n=problem.section, check=False, stability=not args.no_stability)
    except NoSignChange as exc:
        curve = exc.args[1] if len(exc.args) > 1 else None
        if args.out and curve is not None:
            _write(Path(args.out), "match_curve.csv", curve.to_csv())
        raise
    out = Path(args.out)
    _write(out, "solution.csv", sol.to_csv())
    _write(out, "summary.json", sol.to_json() + "\n")
    if sol.curve is not None:
        _write(out, "match_curve.csv", sol.curve.to_csv())
    c, d, s = sol.junction
    tr = sol.trajectory
    ts = np.linspace(0.0, min(1.0, tr.end), 2001)
    tmax = float(ts[int(np.argmax(tr(ts)[:, 0]))])
    if args.json:
        print(sol.to_json())
    else:
        print(f"ell*          {_fmt(sol.ell_star)}")
        print(f"junction      c = {_fmt(c)}  d = {_fmt(d)}  s = {_fmt(s)}")
        print(f"max at        t = {_fmt(tmax)}")
        print(f"x(T_max)      {_fmt(float(tr.x[-1]))}  (T_max = {_fmt(tr.end)})")
        for k, v in sorted(sol.report.items()):
            if isinstance(v, dict) and "passed" in v:
                print(f"check {k:<14} {_fmt(v['passed'])}")
        if sol.stability:
            st = sol.stability
            print(f"check stability      {_fmt(st['passed'])}  max diff {_fmt(st['max_diff'])} on [0, {_fmt(st['compare_until'])}]")
        print(f"verification  {_fmt(sol.passed)}")
        print(f"written to    {out}")
    return EXIT_OK if sol.passed else EXIT_FAIL


# ---------------------------------------------------------- disconjugacy


def cmd_disconjugacy(args) -> int:
    if args.problem is None and args.a is None:
        raise UsageError("give a problem or --a EXPR")
    if args.a is not None:
        try:
            a = ScalarField.from_text(args.a, 0.0, math.inf)
        except ParseError as exc:
            raise UsageError(f"--a: {exc}") from exc
        M = 1.0 if args.M is None else args.M
        T_max, tol, name = (args.Tmax or 1e3), 1e-11, f"a = {args.a}"
    else:
        problem = load_problem(args.problem)
        a = problem.a
        M = problem.B * problem.K if args.M is None else args.M
        T_max, tol, name = (args.Tmax or problem.T_max), min(problem.ode_tol, 1e-11), problem.name
    T = 1.0 if args.T is None else args.T
    if not M > 0:
        raise UsageError("M must be positive")
    if not T < T_max:
        raise UsageError("need T < T_max")
    if args.primal:
        eq = LinearEq(a, lambda t: M, name="primal")
        verdict = is_disconjugate(eq, T, T_max, tol)
    else:
        eq = dual(a, M)
        verdict = is_disconjugate_dual_halfline(a, M, T, T_max, tol)
    d = dict(verdict.to_dict(), problem=name, M=M, equation="primal" if args.primal else "dual")
    print(_dump(d) if args.json else "\n".join(f"{k:<22} {_fmt(v)}" for k, v in sorted(d.items()) if v is not None))
    if args.principal_csv:
        if not verdict.certified:
            print("no principal solution written: not certified", file=sys.stderr)
        else:
            y = principal_solution(eq, T, 1.0, T_max, tol=1e-7)
            y.to_csv(args.principal_csv)
    return EXIT_OK if verdict.certified else EXIT_FAIL


# ----------------------------------------------------------- slope table


def cmd_slope_table(args) -> int:
    problem = load_problem(args.problem)
    spec = _spec(args, problem)
    if args.c:
        cs = sorted(set(args.c))
    else:
        cs = sorted(2.0 ** -n for n in range(0, args.ladder + 1))
    if not cs or cs[0] <= 0:
        raise UsageError("every c must be positive")
    smap = SlopeMap(spec)
    rows = [(c, smap(c)) for c in cs]
    text = "c,s\n" + "".join("%.17g,%.17g\n" % r for r in rows)
    if args.out:
        _write(Path(args.out), "slope_table.csv", text)
    sys.stdout.write(text)
    return EXIT_OK if all(s <= 0 for _, s in rows) else EXIT_FAIL


# ---------------------------------------------------------------- catalog


def cmd_catalog(args) -> int:
    if args.action == "list":
        for name in catalog_names():
            print(name)
        return EXIT_OK
    if not args.name:
        raise UsageError("catalog show needs a name")
    sys.stdout.write(catalog_text(args.name))
    return EXIT_OK


# ----------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="halfline-bvp", description="Positive decaying solutions of (a x')' + b F(x) = 0 on [0, inf).")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, problem_optional=False):
        if problem_optional:
            sp.add_argument("problem", nargs="?", help="catalog name or problem file")
        else:
            sp.add_argument("problem", help="catalog name or problem file")
        sp.add_argument("--Tmax", type=float, help="override the truncation point")
        sp.add_argument("--tol", type=float, help="override the solution tolerance")
        sp.add_argument("--json", action="store_true", help="print JSON instead of a table")
        sp.add_argument("--linear-hook", action="store_true", help=argparse.SUPPRESS)

    sp = sub.add_parser("check", help="verify the hypotheses of the existence theorem")
    common(sp)
    sp.add_argument("--window", type=float, nargs=2, metavar=("T1", "T2"), help="use this window instead of searching")
    sp.add_argument("--variant", choices=("window", "positive-weight"), default="window")
    sp.add_argument("--out", help="also write check.json here")
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("solve", help="solve the boundary value problem")
    common(sp)
    sp.add_argument("--window", type=float, nargs=2, metavar=("T1", "T2"))
    sp.add_argument("--variant", choices=("window", "positive-weight"), default="window")
    sp.add_argument("--force", action="store_true", help="solve even if the check fails")
    sp.add_argument("--no-stability", action="store_true", help="skip the re-solve with doubled T_max")
    sp.add_argument("--out", default="out", help="output directory (default: out)")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("disconjugacy", help="disconjugacy of v'' + (M/a) v = 0 on [T, T_max]")
    common(sp, problem_optional=True)
    sp.add_argument("--a", help="coefficient a(t) as an expression, instead of a problem")
    sp.add_argument("--M", type=float, help="constant M (default B K of the problem, or 1)")
    sp.add_argument("--T", type=float, help="left end (default 1)")
    grp = sp.add_mutually_exclusive_group()
    grp.add_argument("--dual", action="store_true", help="test the dual equation (default)")
    grp.add_argument("--primal", action="store_true", help="test (a y')' + M y = 0 instead")
    sp.add_argument("--principal-csv", metavar="PATH", help="write the principal solution with y(T) = 1")
    sp.set_defaults(func=cmd_disconjugacy)

    sp = sub.add_parser("slope-table", help="tabulate s(c) = x'(1) of the half-line solution")
    common(sp)
    sp.add_argument("--c", type=float, nargs="+", help="values of c (default 2^-n, n = 0..ladder)")
    sp.add_argument("--ladder", type=int, default=10)
    sp.add_argument("--out", help="also write slope_table.csv here")
    sp.set_defaults(func=cmd_slope_table)

    sp = sub.add_parser("catalog", help="built-in problems")
    sp.add_argument("action", choices=("list", "show"))
    sp.add_argument("name", nargs="?")
    sp.set_defaults(func=cmd_catalog)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (UsageError, ProblemFileError, ParseError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except VerificationFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except NONCONVERGENCE as exc:
        print(f"solver did not converge ({type(exc).__name__}): {exc.args[0] if exc.args else exc}", file=sys.stderr)
        return EXIT_NONCONV


if __name__ == "__main__":
    sys.exit(main())
