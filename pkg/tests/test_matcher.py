import json
import math
from dataclasses import replace

import numpy as np
import pytest

from halfline_bvp.matcher import (
    GlobalSolution,
    NoSignChange,
    build_match_curve,
    gap_tol,
    solve_bvp,
    verify,
)
from halfline_bvp.odeint import Trajectory
from halfline_bvp.problem import load_problem
from halfline_bvp.shooting import cross_section

from conftest import make_spec


def test_example2_verified(ex2_solution):
    rep = ex2_solution.report
    for key in ("boundary", "positivity", "local_max", "monotone", "junction", "int", "residual"):
        assert rep[key]["passed"], (key, rep[key])
    assert ex2_solution.passed


def test_example2_junction(ex2_solution):
    c, d, s = ex2_solution.junction
    assert c > 0 and s <= 0
    assert abs(d - s) <= gap_tol(d, s)
    assert ex2_solution.ell_star > 0
    assert ex2_solution.trajectory.start == 0.0
    assert ex2_solution.trajectory(1.0)[0] == pytest.approx(c, rel=1e-12)


def test_example2_shape(ex2_solution):
    tr = ex2_solution.trajectory
    ts = np.linspace(0, 1, 2001)
    k = int(np.argmax(tr(ts)[:, 0]))
    assert 0 < ts[k] <= 1
    tail = tr(np.linspace(1, tr.end, 2001))[:, 0]
    assert np.all(tail > 0)
    assert np.max(np.diff(tail)) <= 1e-7 * np.max(tail)


def test_example2_stability(ex2_solution):
    st = ex2_solution.stability
    assert st["passed"], st
    assert st["max_diff"] <= st["limit"]
    assert st["compare_until"] == pytest.approx(ex2_solution.trajectory.end / 2)


def test_perturbed_example2(ex2p_solution):
    assert ex2p_solution.passed, ex2p_solution.report
    assert ex2p_solution.stability["passed"]
    c, d, s = ex2p_solution.junction
    assert c > 0 and abs(d - s) <= gap_tol(d, s)


def test_roots_sorted_by_c(ex2_solution):
    cs = [r[1] for r in ex2_solution.roots]
    assert cs == sorted(cs, reverse=True)
    assert cs[0] == ex2_solution.junction[0]


def test_summary_json(ex2_solution):
    d = json.loads(ex2_solution.to_json())
    for key in ("ell_star", "junction", "T_max", "x_T_max", "anchors", "roots", "halfline", "report", "stability"):
        assert key in d
    assert d["report"]["passed"] is True
    assert set(d["junction"]) == {"c", "d", "s", "gap"}
    assert ex2_solution.to_json() == ex2_solution.to_json()


def test_match_curve(ex2_solution):
    curve = ex2_solution.curve
    assert curve.sign_changes()
    text = curve.to_csv()
    lines = text.splitlines()
    assert lines[0] == "ell,c,d,s,gap"
    assert len(lines) == len(curve.entries) + 1
    fin = np.isfinite(curve.gap)
    np.testing.assert_array_equal(curve.gap[fin], curve.entries[fin, 2] - curve.entries[fin, 3])


def test_match_curve_flags_outside_quadrant(ex2, ex2_slopes):
    sec = cross_section(ex2, 1e-4, 0.5, 32)
    curve = build_match_curve(ex2, sec, ex2_slopes)
    quad = sec.quadrant()
    assert np.all(np.isnan(curve.gap[~quad]))
    assert sum(1 for _, why in curve.flags if "quadrant" in why) == int(np.sum(~quad))


def test_linear_hook_has_no_root():
    # x = ell t e^-t on [0, 1] meets the right solution c e^(1-t) with gap ell / e > 0
    spec = load_problem("example3").to_spec(linear_hook=True)
    with pytest.raises(NoSignChange) as ei:
        solve_bvp(spec, check=False)
    curve = ei.value.curve
    fin = np.isfinite(curve.gap)
    np.testing.assert_allclose(curve.gap[fin], curve.ell[fin] / math.e, rtol=1e-6)


def test_no_anchor_for_zero_weight():
    with pytest.raises(NoSignChange):
        solve_bvp(make_spec(a="(1+t)^2", b="0", B=0.2), check=False)


def test_verify_rejects_broken_junction(ex2_solution, ex2):
    right = ex2_solution.right.project(np.diag([1.001, 1.0]))
    bad = replace(ex2_solution, right=right, trajectory=Trajectory.concatenate([ex2_solution.left, right]))
    rep = verify(bad, ex2)
    assert not rep["junction"]["passed"] and not rep["passed"]


def test_verify_rejects_sign_change(ex2_solution, ex2):
    left = ex2_solution.left
    ts = np.linspace(0, 1, 401)
    y = left(ts)
    dy = left.deriv(ts)
    y[:, 0] -= 0.5 * np.sin(np.pi * ts) * np.max(y[:, 0]) * 4
    fake = Trajectory.from_hermite(ts, y, dy, left.tol)
    bad = replace(ex2_solution, left=fake, trajectory=Trajectory.concatenate([fake, ex2_solution.right]))
    rep = verify(bad, ex2)
    assert not rep["positivity"]["passed"]
    assert not rep["passed"]


def test_global_solution_csv(ex2_solution):
    text = ex2_solution.to_csv()
    assert text.splitlines()[0] == "t,x,p"
    first = text.splitlines()[1].split(",")
    assert float(first[0]) == 0.0 and float(first[1]) == 0.0
    assert isinstance(ex2_solution, GlobalSolution)
