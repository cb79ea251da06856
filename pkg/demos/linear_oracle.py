"""The linear test problem (F(u) = u) where every piece has a closed form.

Left piece: x(0) = 0, x'(0) = ell gives ell t e^-t.
Right piece: the decaying solution with x(1) = c is c e^(1-t), so s(c) = -c.
At t = 1 the left slope is d = 0 while s(c) = -ell/e, so the gap d - s(c)
is ell/e > 0 for every ell and the matcher finds no root.

Run with ``python demos/linear_oracle.py``.
"""

import math

import numpy as np

from halfline_bvp.halfline import SlopeMap
from halfline_bvp.matcher import NoSignChange, solve_bvp
from halfline_bvp.problem import load_problem
from halfline_bvp.shooting import solve_cauchy, truncation

spec = load_problem("example3").to_spec(linear_hook=True)
ts = np.linspace(0, 1, 201)
for ell in (0.1, 1.0, 3.0):
    tr = solve_cauchy(spec, truncation(spec), ell)
    err = np.max(np.abs(tr(ts)[:, 0] - ell * ts * np.exp(-ts)))
    c, d = tr.x[-1], tr.p[-1] / spec.a(1.0)
    print(f"ell = {ell}: sup |x - ell t e^-t| = {err:.1e}, c = {c:.6f} (ell/e = {ell / math.e:.6f}), d = {d:.1e}")

smap = SlopeMap(spec)
for c in (0.25, 1.0, 4.0):
    print(f"s({c}) = {smap(c):.10f}")

try:
    solve_bvp(spec, check=False)
except NoSignChange as exc:
    fin = np.isfinite(exc.curve.gap)
    ratio = exc.curve.gap[fin] / exc.curve.ell[fin]
    print(f"no root: gap / ell ranges over [{ratio.min():.8f}, {ratio.max():.8f}], 1/e = {1 / math.e:.8f}")
