"""Solve the indefinite-weight catalog problem step by step.

Run with ``python demos/example2_walkthrough.py``; takes about ten seconds.
"""

import numpy as np

from halfline_bvp.conditions import full_check
from halfline_bvp.halfline import SlopeMap, sandwich_bounds, solve_sec
from halfline_bvp.matcher import build_match_curve, solve_bvp
from halfline_bvp.problem import load_problem
from halfline_bvp.shooting import cross_section, find_delta1, find_delta2

spec = load_problem("example2").to_spec()

# existence conditions on a hand-picked window
rep = full_check(spec, (1 / 3, 1 / 2))
print(f"window (1/3, 1/2): A1 lhs {rep.A1_lhs:.4f} < 1, A2 {rep.A2_lhs:.1f} > {rep.A2_rhs:.1f}")

# left piece: the two anchors of the shooting family
d1, d2 = find_delta1(spec), find_delta2(spec)
print(f"x(1) = 0 at ell = {d1.ell:.6g}, x'(1) = 0 at ell = {d2.ell:.6g}")
sec = cross_section(spec, min(d1.ell, d2.ell), max(d1.ell, d2.ell), 32)
print(f"cross section: {len(sec.entries)} points, quadrant-connected: {sec.quadrant_connected()}")

# right piece at c = 1, squeezed between the minorant and the majorant
bounds = sandwich_bounds(spec)
sol = solve_sec(spec, 1.0, bounds=bounds)
w0, y0 = sol.sandwich
t = np.array([1.0, 2.0, 5.0, 20.0, 100.0])
print("t      w0         x          y0")
for ti, lo, x, hi in zip(t, w0(t)[:, 0], sol.trajectory(t)[:, 0], y0(t)[:, 0]):
    print(f"{ti:<6g} {lo:.4e} {x:.4e} {hi:.4e}")
print(f"Picard iterations {sol.iterations}, slope s(1) = {sol.slope:.6f}")

# slope map near zero: s(c) ~ c s'(0)
smap = SlopeMap(spec)
for n in (2, 6, 10):
    c = 2.0**-n
    print(f"s(2^-{n}) / 2^-{n} = {smap(c) / c:.6f}")

# gap along the section and the matched solution
curve = build_match_curve(spec, sec, smap)
print(f"gap sign changes at section indices {curve.sign_changes()}")
g = solve_bvp(spec, smap=smap, check=False)
c, d, s = g.junction
print(f"ell* = {g.ell_star:.10g}, junction c = {c:.6e}, d - s = {d - s:.2e}")
print("verification:", {k: v["passed"] for k, v in g.report.items() if isinstance(v, dict)})
