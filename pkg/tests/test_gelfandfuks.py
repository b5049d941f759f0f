import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from singfol import gelfandfuks as gf


def delta(q, i, *lower):
    return gf.delta_lower(q, i, *lower)


def first_equation_value(q, i, X, Y):
    """(d delta^i + delta^i_j ^ delta^j)(X, Y) by the bracket formula."""
    total = gf.ce_evaluate_direct(delta(q, i), [X, Y])
    for j in range(q):
        total += delta(q, i, j).wedge(delta(q, j)).evaluate([X, Y])
    return total


def second_equation_value(q, i, j, X, Y):
    total = gf.ce_evaluate_direct(delta(q, i, j), [X, Y])
    for k in range(q):
        total += delta(q, i, j, k).wedge(delta(q, k)).evaluate([X, Y])
        total += delta(q, i, k).wedge(delta(q, k, j)).evaluate([X, Y])
    return total


@pytest.mark.parametrize("q", [1, 2, 3])
def test_structure_equations_symbolic(q):
    for name, residual in gf.structure_equation_residuals(q):
        assert residual.is_zero(), name


@pytest.mark.parametrize("q", [1, 2])
def test_structure_equations_on_basis_pairs(q):
    labels = gf.basis(q, 3)
    for X, Y in itertools.combinations(labels, 2):
        for i in range(q):
            assert first_equation_value(q, i, X, Y) == 0
            for j in range(q):
                assert second_equation_value(q, i, j, X, Y) == 0


def test_dual_value_pairing():
    assert delta(2, 0, 1, 1).evaluate([(0, (0, 2))]) == 2
    assert delta(2, 1, 0).evaluate([(1, (1, 0))]) == -1


def test_bracket_of_coordinate_fields():
    # [d_1, s^1 d_2] = d_2
    assert gf.bracket({(0, (0, 0)): 1}, {(1, (1, 0)): 1}) == {(1, (0, 0)): Fraction(1)}


labels2 = st.sampled_from(gf.basis(2, 2))


@settings(max_examples=50, deadline=None)
@given(labels2, labels2, labels2)
def test_jacobi_identity(X, Y, Z):
    x, y, z = {X: 1}, {Y: 1}, {Z: 1}
    total = {}
    for a, b, c in ((x, y, z), (y, z, x), (z, x, y)):
        for l, v in gf.bracket(a, gf.bracket(b, c)).items():
            total[l] = total.get(l, 0) + v
    assert all(v == 0 for v in total.values())


@settings(max_examples=25, deadline=None)
@given(st.lists(st.sampled_from(gf.basis(2, 2)), min_size=1, max_size=2, unique=True),
       st.lists(st.sampled_from(gf.basis(2, 3)), min_size=3, max_size=3, unique=True))
def test_structural_differential_matches_bracket_formula(labels, fields):
    c = gf.GFCochain(2, 2, len(labels), {tuple(labels): 1})
    dc = gf.ce_differential(c)
    fields = fields[: c.degree + 1]
    assert dc.evaluate(fields) == gf.ce_evaluate_direct(c, fields)


@pytest.mark.parametrize("q", [1, 2])
def test_d_squared_on_basis_cochains(q):
    labels = gf.basis(q, 2)
    rng = random.Random(q)
    for p in (1, 2, 3):
        combos = list(itertools.combinations(labels, p))
        for key in rng.sample(combos, min(40, len(combos))):
            c = gf.GFCochain(q, 2, p, {key: 1})
            assert gf.ce_differential(gf.ce_differential(c, 4), 4).is_zero()


@pytest.mark.parametrize("q", [1, 2])
def test_universal_cocycles(q):
    for i in range(1, q + 1):
        c = gf.universal_c(i, q)
        assert gf.ce_differential(c).is_zero()
        assert c.max_label_order() <= 2
        assert all(b.passed for b in gf.check_oq_basic(c))
    h1 = gf.universal_h(1, q)
    assert h1.max_label_order() <= 2
    assert (gf.ce_differential(h1) - gf.universal_c(1, q)).is_zero()
    assert all(b.passed for b in gf.check_oq_basic(h1))


def test_non_basic_cochain_detected():
    c = delta(2, 0, 1)
    assert not all(b.passed for b in gf.check_oq_basic(c))


def test_order_overflow():
    with pytest.raises(gf.OrderOverflowError):
        gf.ce_differential(delta(1, 0, 0, 0, 0), 3)
