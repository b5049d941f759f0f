import random

import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from singfol.errors import SpecError, SpecSyntaxError
from singfol.expr import ZeroStatus, normalize, zero_test
from singfol.syntax import parse_expr, to_text

x, y, z = sp.symbols("x y z")


def test_normalize_cancels_rational_functions():
    e = (x**2 - y**2) / (x - y) - (x + y)
    assert normalize(e) == 0


def test_zero_test_exact_zero():
    r = zero_test(sp.sin(x) ** 2 + sp.cos(x) ** 2 - 1, rng=random.Random(0))
    assert r.status is not ZeroStatus.PROVEN_NONZERO
    assert r.numerically_zero


def test_zero_test_nonzero_has_witness():
    r = zero_test(x * y - 1, rng=random.Random(0))
    assert r.status is ZeroStatus.PROVEN_NONZERO
    assert r.witness is not None


def test_parse_caret_powers_and_functions():
    e = parse_expr("x^2*exp(-y) + sqrt(z)/3", ["x", "y", "z"])
    assert normalize(e - (x**2 * sp.exp(-y) + sp.sqrt(z) / 3)) == 0


def test_parse_rejects_unknown_identifier():
    with pytest.raises(SpecError):
        parse_expr("x + w", ["x", "y"])


def test_parse_reports_column():
    with pytest.raises(SpecSyntaxError) as info:
        parse_expr("x + * y", ["x", "y"])
    assert info.value.col is not None


polys = st.lists(st.tuples(st.integers(-5, 5), st.integers(0, 3), st.integers(0, 3)), min_size=1, max_size=5)


@settings(max_examples=40, deadline=None)
@given(polys, st.integers(1, 4))
def test_round_trip_polynomials(terms, den):
    e = normalize(sum(sp.Rational(c, den) * x**a * y**b for c, a, b in terms))
    back = parse_expr(to_text(e), ["x", "y"])
    assert normalize(back - e) == 0


@settings(max_examples=25, deadline=None)
@given(polys, polys)
def test_round_trip_rational_functions(num, den):
    d = normalize(1 + sum(abs(c) * x**(2 * a) * y**(2 * b) for c, a, b in den))
    e = normalize(sum(c * x**a * y**b for c, a, b in num) / d)
    back = parse_expr(to_text(e), ["x", "y"])
    assert normalize(back - e) == 0
