import itertools

import sympy as sp
from hypothesis import given, settings, strategies as st

from singfol.exterior import Chart, DiffForm, MatrixForm, parse_form, trace, matrix_power_wedge

C3 = Chart("U", ("x", "y", "z"))
C4 = Chart("V", ("x", "y", "z", "w"))


def poly(chart, terms):
    syms = chart.symbols
    return sum(c * sp.Mul(*[s**e for s, e in zip(syms, exps)]) for c, exps in terms)


def forms(chart, degree):
    idx = list(itertools.combinations(range(chart.dim), degree))
    term = st.tuples(st.integers(-4, 4), st.tuples(*[st.integers(0, 2)] * chart.dim))
    return st.lists(st.tuples(st.sampled_from(idx), st.lists(term, min_size=1, max_size=3)),
                    min_size=1, max_size=3).map(
        lambda items: _sum(chart, degree, items))


def _sum(chart, degree, items):
    acc = DiffForm.zero(chart, degree)
    for i, terms in items:
        acc = acc + DiffForm(chart, {i: poly(chart, terms)}, degree)
    return acc


def test_coordinate_forms_anticommute():
    dx, dy = DiffForm.dcoord(C3, "x"), DiffForm.dcoord(C3, "y")
    assert (dx.wedge(dy) + dy.wedge(dx)).is_syntactic_zero()
    assert dx.wedge(dx).is_syntactic_zero()


def test_d_of_function():
    x, y, z = C3.symbols
    df = DiffForm.scalar(C3, x * y**2 + z).d()
    assert df.coefficient((0,)) == y**2
    assert df.coefficient((1,)) == 2 * x * y
    assert df.coefficient((2,)) == 1


def test_high_degree_zero_form_allowed():
    f = DiffForm.zero(C3, 5)
    assert f.degree == 5 and f.is_syntactic_zero()


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2).flatmap(lambda k: forms(C4, k)))
def test_d_squared_vanishes(a):
    assert a.d().d().is_syntactic_zero()


@settings(max_examples=25, deadline=None)
@given(forms(C3, 1), forms(C3, 1))
def test_leibniz_rule(a, b):
    lhs = a.wedge(b).d()
    rhs = a.d().wedge(b) - a.wedge(b.d())
    assert (lhs - rhs).is_syntactic_zero()


@settings(max_examples=25, deadline=None)
@given(forms(C3, 1), forms(C3, 2))
def test_graded_commutativity(a, b):
    assert (a.wedge(b) - b.wedge(a)).is_syntactic_zero()


@settings(max_examples=15, deadline=None)
@given(forms(C3, 1))
def test_pullback_commutes_with_d(a):
    src = Chart("S", ("u", "v"))
    u, v = src.symbols
    phi = [u * v, u + v**2, u - v]
    assert (a.pullback(phi, src).d() - a.d().pullback(phi, src)).is_syntactic_zero()


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 3).flatmap(lambda k: forms(C4, k)))
def test_form_text_round_trip(a):
    back = parse_form(a.to_text(), C4, a.degree)
    assert (back - a).is_syntactic_zero()


def test_parse_form_syntax():
    f = parse_form("(x*y)*dx*dz - 2*dz*dy", C3)
    x, y, _ = C3.symbols
    assert f.degree == 2
    assert f.coefficient((0, 2)) == x * y
    assert f.coefficient((1, 2)) == 2


def test_matrix_trace_power_is_closed():
    x, y, z = C3.symbols
    theta = MatrixForm([[DiffForm.one_form(C3, [y, z, x]), DiffForm.one_form(C3, [x * z, 0, 1])],
                        [DiffForm.one_form(C3, [1, x, 0]), DiffForm.one_form(C3, [0, y, z])]])
    R = theta.d() + theta.wedge(theta)
    assert trace(R).d().is_syntactic_zero()
    assert trace(matrix_power_wedge(R, 2)).d().is_syntactic_zero()
