import random

import pytest
import sympy as sp

from singfol.errors import SingularJetError
from singfol.jets import JetMap, compose_jets, invert_jet, jets_equal, multi_indices_upto, prolong_map


def random_group_element(q, k, rng):
    """Random element of G^k_q with rational coefficients and invertible linear part."""
    while True:
        L = sp.Matrix(q, q, lambda i, j: sp.Rational(rng.randint(-3, 3), rng.randint(1, 3)))
        if L.det() != 0:
            break
    coeffs = []
    for i in range(q):
        d = {}
        for a in multi_indices_upto(q, k):
            if sum(a) == 1:
                d[a] = L[i, a.index(1)]
            elif rng.random() < 0.6:
                d[a] = sp.Rational(rng.randint(-4, 4), rng.randint(1, 4))
        coeffs.append(d)
    zero = (sp.Integer(0),) * q
    return JetMap(zero, zero, k, tuple(coeffs))


@pytest.mark.parametrize("q", [1, 2, 3])
@pytest.mark.parametrize("k", [2, 3])
def test_group_axioms(q, k):
    rng = random.Random(10 * q + k)
    e = JetMap.identity(q, k)
    for _ in range(3):
        a, b, c = (random_group_element(q, k, rng) for _ in range(3))
        assert jets_equal(compose_jets(a, compose_jets(b, c)), compose_jets(compose_jets(a, b), c))
        assert jets_equal(compose_jets(a, e), a) and jets_equal(compose_jets(e, a), a)
        ai = invert_jet(a)
        assert jets_equal(compose_jets(a, ai), e) and jets_equal(compose_jets(ai, a), e)


def test_composition_matches_chain_rule():
    u, v = sp.symbols("u v")
    f = [u + u * v, v - u**2]
    g = [u * sp.exp(v), v + u**3]
    gf = [e.subs({u: f[0], v: f[1]}, simultaneous=True) for e in g]
    at = (sp.Rational(1, 2), sp.Rational(-1, 3))
    jf = prolong_map(f, ["u", "v"], at, 3)
    jg = prolong_map(g, ["u", "v"], jf.value, 3)
    assert jets_equal(compose_jets(jg, jf), prolong_map(gf, ["u", "v"], at, 3))


def test_singular_linear_part_is_rejected():
    j = JetMap.linear([[1, 2], [2, 4]], 2)
    with pytest.raises(SingularJetError):
        invert_jet(j)


def test_linear_jets_compose_as_matrices():
    A = sp.Matrix([[1, 2], [0, 3]])
    B = sp.Matrix([[2, 0], [1, 1]])
    assert jets_equal(compose_jets(JetMap.linear(A, 2), JetMap.linear(B, 2)), JetMap.linear(A * B, 2))
