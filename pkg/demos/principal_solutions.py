"""Disconjugacy and principal solutions on closed-form examples.

Run with ``python demos/principal_solutions.py``; takes a few seconds.
"""

import math

import numpy as np

from halfline_bvp.exprfn import ScalarField
from halfline_bvp.linear_theory import (
    LinearEq,
    classify,
    is_disconjugate,
    is_disconjugate_dual_halfline,
    principal_solution_ex,
)
from halfline_bvp.problem import load_problem

one = ScalarField.constant(1.0)

# v'' + v = 0 has its first conjugate point at pi
v = is_disconjugate(LinearEq(one, lambda t: 1.0), 0.0, 4.0)
print(f"v'' + v = 0: {v.status} at t = {v.first_conjugate_point:.12f} (pi = {math.pi:.12f})")

# the Euler equation v'' + v / (4 (1+t)^2) = 0 sits exactly on the borderline;
# above it zeros are spaced by the factor exp(2 pi / sqrt(M - 1/4)) in 1 + t
euler = ScalarField.from_text("(1+t)^2")
for M in (0.2, 0.25, 4.0):
    print(f"dual with M = {M}: {is_disconjugate_dual_halfline(euler, M, 1.0, 1000.0).status}")

# (e^(2t) y')' + e^(2t) y = 0: e^-t is principal, t e^-t is not
e2t = ScalarField.from_text("exp(2*t)")
eq = LinearEq(e2t, lambda t: math.exp(2 * t))
res = principal_solution_ex(eq, 1.0, 1.0, 65.0, tol=1e-8, ode_tol=1e-11)
ts = np.linspace(1, 10, 1000)
print(f"ladder fluxes p(1) {np.round(res.slopes, 6)}")
print(f"  extrapolated {res.slope:.10f}, exact -e^2 = {-math.e ** 2:.10f}, mode {res.mode}")
print(f"sup |y - e^(1-t)| on [1, 10] = {np.max(np.abs(res.trajectory(ts)[:, 0] - np.exp(1 - ts))):.2e}")
for name, y in (("e^-t", lambda t: math.exp(-t)), ("t e^-t", lambda t: t * math.exp(-t))):
    cl = classify(eq, y, 65.0, T=1.0)
    print(f"{name:7s} growth of int 1/(a y^2) along the ladder {np.round(cl.integral_growth, 4)} -> {cl.verdict}")

# the catalog's first entry has principal solution t e^-t on [0.5, inf)
a1 = load_problem("example1").a
res1 = principal_solution_ex(LinearEq(a1, lambda t: 1.0), 0.5, 0.5 * math.exp(-0.5), 40.0, tol=1e-8, ode_tol=1e-11)
ts = np.linspace(0.5, 10, 1000)
print(f"example1: sup |y - t e^-t| = {np.max(np.abs(res1.trajectory(ts)[:, 0] - ts * np.exp(-ts))):.2e}")
print(f"example1 dual from T = 0: {is_disconjugate_dual_halfline(a1, 1.0, 0.0, 40.0).status}")
