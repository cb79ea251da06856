import json
from dataclasses import replace

import numpy as np
import pytest

from halfline_bvp.halfline import (
    RegularizedQuotient,
    eq1_residual,
    majorant_principal,
    minorant_principal,
    sandwich_bounds,
    solve_sec,
    verify_int,
)
from halfline_bvp.odeint import Trajectory
from halfline_bvp.problem import load_problem

from conftest import make_spec


@pytest.fixture(scope="module")
def ex2_bounds(ex2):
    return sandwich_bounds(ex2)


@pytest.fixture(scope="module")
def ex2_c1(ex2, ex2_bounds):
    return solve_sec(ex2, 1.0, bounds=ex2_bounds, record_iterates=True)


def test_majorant_positive_decreasing(ex2):
    y0 = majorant_principal(ex2, 1.0)
    assert y0.start == 1.0 and y0.end == ex2.T_max
    assert y0.x[0] == pytest.approx(1.0)
    assert np.all(y0.x > 0)
    assert np.all(np.diff(y0.x) < 0)


def test_majorant_scales_linearly(ex2):
    y1 = majorant_principal(ex2, 1.0)
    y2 = majorant_principal(ex2, 2.0)
    ts = np.linspace(1, ex2.T_max, 200)
    np.testing.assert_allclose(y2(ts)[:, 0], 2 * y1(ts)[:, 0], rtol=1e-8, atol=1e-12)


def test_minorant_below_majorant(ex2, ex2_bounds):
    w0, y0 = ex2_bounds
    ts = np.linspace(1, ex2.T_max, 500)
    lo, hi = w0(ts)[:, 0], y0(ts)[:, 0]
    assert np.all(lo >= 0)
    assert np.all(lo <= hi + 1e-12)
    assert np.all(np.diff(lo) <= 1e-12)


def test_minorant_for_nonnegative_weight():
    # b >= 0 leaves (a w')' = 0, whose principal solution is c int_t^inf 1/a / int_1^inf 1/a
    spec = make_spec(a="(1+t)^2", b="0.1/(1+t)^3", B=0.2)
    w0 = minorant_principal(spec, 3.0)
    np.testing.assert_allclose(w0.x, 3.0 * 2.0 / (1 + w0.t), rtol=1e-6)


def test_example3_hook_closed_form():
    spec = load_problem("example3").to_spec(linear_hook=True)
    for c in (0.5, 1.0, 2.0):
        sol = solve_sec(spec, c)
        ts = np.linspace(1, 10, 300)
        np.testing.assert_allclose(sol.trajectory(ts)[:, 0], c * np.exp(1 - ts), atol=1e-7 * c)
        assert sol.slope == pytest.approx(-c, abs=1e-6 * c)
        assert sol.iterations == 1 and sol.sandwich is None
        assert sol.int_stat.verdict == "principal"


def test_example2_c1_slope_and_principal(ex2, ex2_c1, ex2_bounds):
    w0 = ex2_bounds[0]
    w0_slope = w0(1.0)[1] / ex2.a(1.0)
    assert w0_slope <= ex2_c1.slope <= 0
    assert ex2_c1.int_stat.verdict == "principal"
    assert ex2_c1.residual <= 10 * ex2.ode_tol
    assert ex2_c1.trajectory.x[0] == pytest.approx(1.0)


def test_example2_iterates_stay_in_sandwich(ex2, ex2_c1):
    w0, y0 = ex2_c1.sandwich
    slack = 1e-6
    for x in ex2_c1.iterates:
        assert np.all(x.x >= w0(x.t)[:, 0] - slack)
        assert np.all(x.x <= y0(x.t)[:, 0] + slack)
    assert len(ex2_c1.iterates) == ex2_c1.iterations


def test_example2_seed_independence(ex2, ex2_c1, ex2_bounds):
    other = solve_sec(ex2, 1.0, seed="minorant", bounds=ex2_bounds)
    ts = np.linspace(1, ex2.T_max, 2001)
    diff = np.max(np.abs(other.trajectory(ts)[:, 0] - ex2_c1.trajectory(ts)[:, 0]))
    assert diff <= 10 * ex2.tol


def test_example2_history_decreases(ex2_c1, ex2):
    h = ex2_c1.history
    assert h[-1] <= ex2.tol
    assert h[-1] < h[0]


def test_slope_map_ladder(ex2_slopes):
    s = np.array([ex2_slopes(2.0**-n) for n in range(1, 11)])
    assert np.all(s <= 0)
    assert np.all(np.diff(s) > 0)
    assert abs(s[-1]) < 1e-3
    # the slope is asymptotically linear in c near zero
    ratios = s[1:] / s[:-1]
    assert abs(ratios[-1] - 0.5) < 0.01


def test_slope_map_cache(ex2_slopes):
    v = ex2_slopes(0.25)
    assert ex2_slopes(0.25) == v
    assert 0.25 in ex2_slopes.cached()


def test_verify_int_nonprincipal():
    spec = load_problem("example3").to_spec(linear_hook=True)
    sol = solve_sec(spec, 1.0)
    ts = sol.trajectory.t
    fake = Trajectory.from_hermite(
        ts, np.column_stack([ts * np.exp(-ts), np.exp(2 * ts) * (1 - ts) * np.exp(-ts)]),
        np.column_stack([(1 - ts) * np.exp(-ts), -np.exp(2 * ts) * ts * np.exp(-ts)]), 1e-10,
    )
    bad = replace(sol, trajectory=fake)
    assert verify_int(bad, spec).verdict == "nonprincipal"


def test_verify_int_scale_invariant(ex2_c1, ex2):
    a = verify_int(ex2_c1, ex2).verdict
    scaled = replace(ex2_c1, trajectory=ex2_c1.trajectory.project(np.diag([3.0, 3.0])))
    assert verify_int(scaled, ex2).verdict == a == "principal"


def test_regularized_quotient_bounded(ex2):
    q = RegularizedQuotient(ex2.F)
    vals = [q(v) for v in np.concatenate([[-5.0, 0.0], np.geomspace(1e-9, 1e9, 100)])]
    assert q(-1.0) == q(0.0) == ex2.F.k0
    assert all(0 <= v <= ex2.K * (1 + 1e-12) for v in vals)


def test_residual_detects_wrong_profile(ex2, ex2_c1):
    assert eq1_residual(ex2_c1.trajectory, ex2) <= 10 * ex2.ode_tol
    bent = ex2_c1.trajectory.project(np.diag([1.0, 1.1]))
    assert eq1_residual(bent, ex2) > 1e-3


def test_solution_outputs(ex2_c1):
    d = json.loads(ex2_c1.to_json())
    for key in ("c", "slope", "iterations", "residual", "history", "int_verdict", "T_max", "x_T_max"):
        assert key in d
    assert d["int_verdict"] == "principal"
    text = ex2_c1.to_csv()
    assert text.splitlines()[0] == "t,x,p"
    assert text == ex2_c1.to_csv()


def test_solve_sec_rejects_nonpositive_c(ex2):
    with pytest.raises(ValueError):
        solve_sec(ex2, 0.0)
    with pytest.raises(ValueError):
        solve_sec(ex2, -1.0)
