import math

import numpy as np
import pytest

from halfline_bvp.odeint import A_of, quad
from halfline_bvp.shooting import (
    NoBracket,
    RefinementCapExceeded,
    TruncatedNonlinearity,
    cross_section,
    find_delta1,
    find_delta2,
    solve_cauchy,
    truncation,
)

from conftest import make_spec


def test_truncated_nonlinearity(ex2):
    Fh = TruncatedNonlinearity(ex2.F, 2.0)
    assert Fh(-1.0) == 0.0 and Fh(0.0) == 0.0
    assert Fh(1.0) == ex2.F.F(1.0)
    assert Fh(5.0) == Fh(2.0) == ex2.F.F(2.0)
    u = np.linspace(-3, 3, 601)
    v = np.array([Fh(x) for x in u])
    assert np.max(np.abs(np.diff(v)) / np.diff(u)) <= Fh.lipschitz * (1 + 1e-9)
    with pytest.raises(ValueError):
        TruncatedNonlinearity(ex2.F, 0.0)


def test_free_motion():
    spec = make_spec(b="0")
    tr = solve_cauchy(spec, truncation(spec), 1.0)
    assert tr.x[-1] == pytest.approx(1.0, abs=1e-12)
    assert tr.p[-1] == pytest.approx(1.0, abs=1e-12)
    ts = np.linspace(0, 1, 11)
    np.testing.assert_allclose(tr(ts)[:, 0], ts, atol=1e-12)


@pytest.mark.parametrize("ell", [1e-3, 0.0016, 0.01, 1.0])
def test_cauchy_first_integral_and_bound(ex2, ell):
    Fh = truncation(ex2)
    tr = solve_cauchy(ex2, Fh, ell)
    x = tr.sampler(0)
    a0 = ex2.a(0.0)
    for t in (0.25, 0.5, 1.0):
        p_int = a0 * ell - quad(lambda s: ex2.b(s) * Fh(x(s)), 0.0, t, 1e-10)
        assert tr(t)[1] == pytest.approx(p_int, abs=1e-7 * (1 + abs(p_int)))
    assert np.max(tr.x) <= a0 * ell * A_of(ex2.a, 1.0) * (1 + 1e-9)


def test_truncation_transparent(ex2):
    ell = 0.0016
    tr = solve_cauchy(ex2, truncation(ex2), ell)
    assert np.min(tr.x) >= 0
    raw = solve_cauchy(ex2, lambda u: ex2.F.F(u) if u > 0 else 0.0, ell)
    ts = np.linspace(0, 1, 101)
    assert np.max(np.abs(tr(ts) - raw(ts))) <= 1e-9


def test_delta1_linear_oracle():
    spec = make_spec(b=str(math.pi**2), linear=True)
    ell, tr = find_delta1(spec)
    ts = np.linspace(0, 1, 101)
    # every ell works in the linear case; the error bound is absolute (tol per unit step)
    np.testing.assert_allclose(tr(ts)[:, 0] / ell, np.sin(math.pi * ts) / math.pi, atol=100 * spec.ode_tol / ell)
    assert abs(tr.x[-1]) <= 1e-9 * (1 + ell)


def test_delta2_linear_oracle():
    spec = make_spec(b=f"{math.pi**2}/4", linear=True)
    ell, tr = find_delta2(spec)
    ts = np.linspace(0, 1, 101)
    np.testing.assert_allclose(tr(ts)[:, 0] / ell, np.sin(math.pi * ts / 2) * 2 / math.pi, atol=100 * spec.ode_tol / ell)
    assert abs(tr.p[-1]) <= 1e-9 * (1 + ell)


def test_no_bracket_for_zero_weight():
    spec = make_spec(b="0")
    with pytest.raises(NoBracket) as ei:
        find_delta1(spec)
    assert ei.value.sweep
    with pytest.raises(NoBracket):
        find_delta2(spec)


def test_example2_anchors(ex2_solution):
    anchors = ex2_solution.anchors
    sec = ex2_solution.section
    assert 0 < anchors["delta2"] < anchors["delta1"]
    e = sec.entries
    lo, hi = e[0], e[-1]
    assert lo[0] == anchors["delta2"] and hi[0] == anchors["delta1"]
    assert lo[1] > 0 and abs(lo[2]) <= 1e-9 * (1 + lo[0]) * 10
    assert abs(hi[1]) <= 1e-9 * (1 + hi[0]) and hi[2] < 0


def test_example2_anchor_positivity(ex2):
    r1 = find_delta1(ex2)
    r2 = find_delta2(ex2)
    ts = np.linspace(1e-3, 1 - 1e-3, 500)
    assert np.all(r1.trajectory(ts)[:, 0] > 0)
    assert np.all(r2.trajectory(np.linspace(1e-3, 1, 500))[:, 0] > 0)
    assert abs(r1.trajectory.x[-1]) <= 1e-9 * (1 + r1.ell)
    assert abs(r2.trajectory.p[-1]) / ex2.a(1.0) <= 1e-9 * (1 + r2.ell)
    assert r1.brackets and r2.brackets


def test_section_quadrant_connected(ex2_solution):
    sec = ex2_solution.section
    assert np.all(np.diff(sec.ell) > 0)
    assert sec.quadrant_connected()
    q = sec.quadrant()
    assert q[0] and q[-1]
    assert sec.modulus > 0


def test_section_ray_for_zero_weight():
    spec = make_spec(a="1 + t", b="0")
    sec = cross_section(spec, 0.5, 2.0, 32)
    A1 = math.log(2.0)
    np.testing.assert_allclose(sec.x1, sec.ell * A1, rtol=1e-10)
    np.testing.assert_allclose(sec.xp1, sec.ell / 2.0, rtol=1e-10)


def test_section_refinement_halves_jump(ex2_solution, ex2):
    lo, hi = ex2_solution.section.beta, ex2_solution.section.alpha
    j32 = cross_section(ex2, lo, hi, 32, jump=np.inf)
    j64 = cross_section(ex2, lo, hi, 64, jump=np.inf)

    def max_jump(s):
        return np.max(np.hypot(*np.diff(s.entries[:, 1:], axis=0).T))

    assert max_jump(j64) / max_jump(j32) == pytest.approx(0.5, abs=0.05)


def test_section_widens_coincident_anchors(ex2):
    sec = cross_section(ex2, 0.0016, 0.0016, 32)
    assert sec.widened and sec.notes
    assert sec.beta == pytest.approx(0.9 * 0.0016) and sec.alpha == pytest.approx(1.1 * 0.0016)


def test_section_refinement_cap(ex2):
    with pytest.raises(RefinementCapExceeded) as ei:
        cross_section(ex2, 1e-4, 1e-2, 32, jump=1e-6, cap=40)
    assert ei.value.interval is not None


def test_section_csv(ex2):
    sec = cross_section(make_spec(b="0"), 1.0, 2.0, 32)
    text = sec.to_csv()
    lines = text.splitlines()
    assert lines[0] == "ell,x1,xp1" and len(lines) == 34
    assert text == cross_section(make_spec(b="0"), 1.0, 2.0, 32).to_csv()


def test_section_validation(ex2):
    with pytest.raises(ValueError):
        cross_section(ex2, 1.0, 2.0, 16)
    with pytest.raises(ValueError):
        cross_section(ex2, 2.0, 1.0, 32)
