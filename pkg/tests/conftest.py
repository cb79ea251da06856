import math

import pytest

from halfline_bvp.conditions import ProblemSpec, TailCertificate, catalog_nonlinearity, linear_nonlinearity
from halfline_bvp.exprfn import ScalarField
from halfline_bvp.problem import load_problem

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        tr.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")


def field(text):
    return ScalarField.from_text(text, 0.0, math.inf)


def make_spec(a="1", b="1", B=1.0, k0=0.5, kinf=1.0, T_max=20.0, linear=False, tail=None, **kw):
    F = linear_nonlinearity() if linear else catalog_nonlinearity(k0, kinf)
    return ProblemSpec(
        a=field(a) if isinstance(a, str) else a,
        b=field(b) if isinstance(b, str) else b,
        F=F,
        B=B,
        T_max=T_max,
        tail=tail or TailCertificate("flag"),
        **kw,
    )


@pytest.fixture(scope="session")
def ex2():
    return load_problem("example2").to_spec()


@pytest.fixture(scope="session")
def ex2p():
    return load_problem("example2-perturbed").to_spec()


@pytest.fixture(scope="session")
def ex3():
    return load_problem("example3").to_spec(linear_hook=True)


@pytest.fixture(scope="session")
def ex2_solution(ex2):
    from halfline_bvp.matcher import solve_bvp

    return solve_bvp(ex2, check=False, stability=True)


@pytest.fixture(scope="session")
def ex2p_solution(ex2p):
    from halfline_bvp.matcher import solve_bvp

    return solve_bvp(ex2p, check=False, stability=True)


@pytest.fixture(scope="session")
def ex2_slopes(ex2):
    from halfline_bvp.halfline import SlopeMap

    return SlopeMap(ex2)
