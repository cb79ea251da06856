import math

import pytest

from halfline_bvp.conditions import verify_assumptions
from halfline_bvp.problem import (
    CATALOG,
    ProblemFileError,
    catalog_names,
    catalog_text,
    load_problem,
    parse_problem,
)

MINIMAL = """\
[coefficients]
a = 1 + t
b = 2
B = 2

[nonlinearity]
k0 = 0.1
kinf = 1
"""


def test_minimal_file_defaults():
    pf = parse_problem(MINIMAL, "mini")
    assert pf.name == "mini" and pf.kind == "catalog"
    assert pf.a(1.0) == 2.0 and pf.b(5.0) == 2.0 and pf.B == 2.0
    assert pf.K == 1.0 and pf.tail.kind == "flag" and pf.b1 is None
    assert (pf.T_max, pf.tol, pf.ode_tol, pf.section) == (513.0, 1e-7, 1e-10, 32)
    spec = pf.to_spec(T_max=30.0, tol=None)
    assert spec.T_max == 30.0 and spec.tol == 1e-7


def test_load_from_path(tmp_path):
    p = tmp_path / "mine.ini"
    p.write_text(MINIMAL + "\n[numerics]\nT_max = 50  # comment\n")
    pf = load_problem(str(p))
    assert pf.name == "mine" and pf.T_max == 50.0


def test_catalog_listing():
    assert catalog_names() == sorted(CATALOG)
    assert {"example1", "example2", "example2-perturbed", "example3", "euler-dual"} <= set(catalog_names())
    assert catalog_text("example2") == CATALOG["example2"]
    with pytest.raises(ProblemFileError):
        catalog_text("nope")
    with pytest.raises(ProblemFileError, match="catalog"):
        load_problem("nope-not-a-file")


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_catalog_entries_load(name):
    pf = load_problem(name)
    linear = pf.kind == "linear"
    spec = pf.to_spec(linear_hook=linear)
    assert spec.name == name
    if name.startswith("example2") or name == "example3":
        v = verify_assumptions(spec)
        assert all(r.passed for r in v.values()), {k: r for k, r in v.items() if not r.passed}


def test_linear_kind_needs_hook():
    with pytest.raises(ProblemFileError, match="hook"):
        load_problem("example3").to_spec()


def test_perturbed_weight_is_sum():
    pf = load_problem("example2-perturbed")
    t = 4.0
    full, base = pf.to_spec(), pf.base_spec()
    b1 = (math.e - math.exp(t)) * (abs(math.cos(t)) - math.cos(t))
    assert full.b(t) == pytest.approx(base.b(t) + b1, rel=1e-12)
    assert full.b(0.5) == base.b(0.5)


def test_singularity_patch():
    a = load_problem("example1").a
    assert math.isfinite(a(1.0)) and a(1.0) == pytest.approx(1.0, abs=1e-12)
    assert a(1.0 + 5e-5) == pytest.approx(a(1.0 + 2e-4), abs=1e-3)


@pytest.mark.parametrize(
    "text, match",
    [
        ("not an ini", "malformed"),
        ("[coefficients]\na = 1\nb = 1\nB = 1\n", "nonlinearity"),
        ("[coefficients]\na = 1\nb = 1\n[nonlinearity]\nk0 = 0\nkinf = 1\n", "'B'"),
        (MINIMAL.replace("b = 2", "b = 2 +"), "b:"),
        (MINIMAL.replace("k0 = 0.1", "k0 = 1"), "k0 must differ"),
        (MINIMAL.replace("k0 = 0.1\n", ""), "k0"),
        (MINIMAL.replace("B = 2", "B = 2\na_tail = cubic 2"), "a_tail"),
        (MINIMAL.replace("[nonlinearity]", "[nonlinearity]\nkind = weird"), "unknown nonlinearity"),
        (MINIMAL.replace("[nonlinearity]", "[nonlinearity]\nkind = expression"), "F and dF"),
        (MINIMAL + "\n[numerics]\nsection = many\n", "numeric"),
        (MINIMAL.replace("b = 2", "b = 2\na_singularities = 1, 2"), "singularity"),
    ],
)
def test_parse_errors(text, match):
    with pytest.raises(ProblemFileError, match=match):
        parse_problem(text)


def test_tail_certificates():
    pf = parse_problem(MINIMAL.replace("B = 2", "B = 2\na_tail = power 2"))
    assert pf.tail.kind == "power" and pf.tail.rate == 2.0
    pf = parse_problem(MINIMAL.replace("B = 2", "B = 2\na_tail = exp 1/2"))
    assert pf.tail.kind == "exp" and pf.tail.rate == 0.5


def test_expression_nonlinearity_file():
    text = MINIMAL.replace("[nonlinearity]", "[nonlinearity]\nkind = expression\nF = t*(1 + t)/(2 + t)\ndF = (t^2 + 4*t + 2)/(2 + t)^2")
    text = text.replace("k0 = 0.1", "k0 = 0.5")
    spec = parse_problem(text).to_spec()
    assert spec.F.F(2.0) == pytest.approx(1.5)
    assert spec.F.dF(0.0) == pytest.approx(0.5)
