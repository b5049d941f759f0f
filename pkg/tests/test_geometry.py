import random

import pytest
import sympy as sp

from conftest import corpus
from singfol.errors import OrthonormalizationAmbiguousError, PreconditionError
from singfol.exterior import DiffForm, MatrixForm
from singfol.geometry import (adapted_check, curvature, exp_section_2jet, exp_section_closed_form, gauge,
                              is_bott, metric_connection, orthonormal_gauge, orthonormalizer,
                              tautological_connection, torsion, torsion_form)
from singfol.jets import JetMap, compose_jets, jets_equal


def geometry(name):
    doc, atlas, geoms = corpus(name)
    conn, eps = next(iter(geoms.values()))
    return atlas, geoms, conn, eps


def random_invertible(q, rng):
    while True:
        C = sp.Matrix(q, q, lambda i, j: sp.Rational(rng.randint(-3, 3), rng.randint(1, 3)))
        if C.det() != 0:
            return C


@pytest.mark.parametrize("name", ["zexp", "r4_bott", "points_r2", "trivial_dz"])
def test_corpus_connections_are_torsion_free_bott(name, rng):
    _, _, conn, _ = geometry(name)
    assert torsion(conn, 10, rng).all_passed
    assert is_bott(conn, 10, rng).all_passed


def test_contrast_connection_has_torsion(rng):
    _, _, conn, _ = geometry("r4_contrast")
    report = torsion(conn, 10, rng)
    assert report.failures() and report.failures()[0].witness is not None
    assert not all(t.is_syntactic_zero() for t in torsion_form(conn))


def test_curvature_is_gauge_covariant():
    _, _, conn, _ = geometry("points_r2")
    x, y = conn.chart.symbols
    C = sp.Matrix([[1, x], [0, 1 + y**2]])
    R = curvature(conn)
    R2 = curvature(gauge(conn, C))
    assert (R2 - R.left_mul(C.inv()).right_mul(C)).is_syntactic_zero()


def test_exponential_section_equivariance():
    _, _, conn, _ = geometry("points_r2")
    rng = random.Random(7)
    base = exp_section_2jet(conn)
    for _ in range(4):
        C = random_invertible(2, rng)
        assert jets_equal(exp_section_2jet(conn, frame=C), compose_jets(base, JetMap.linear(C, 2)))


@pytest.mark.parametrize("name", ["zexp", "points_r2", "r4_bott"])
def test_ambient_route_matches_closed_form(name):
    _, _, conn, _ = geometry(name)
    assert jets_equal(exp_section_2jet(conn), exp_section_closed_form(conn))


def test_auxiliary_connection_is_irrelevant():
    _, _, conn, _ = geometry("zexp")
    ch = conn.chart
    x, y, z = ch.symbols
    aux = MatrixForm([[DiffForm.one_form(ch, [y, 1, z]), DiffForm.one_form(ch, [0, x * y, 1])],
                      [DiffForm.one_form(ch, [2, 0, 0]), DiffForm.one_form(ch, [z, z, x])]])
    assert jets_equal(exp_section_2jet(conn), exp_section_2jet(conn, aux=aux))


def test_tautological_connection_recovers_connection(rng):
    _, _, conn, eps = geometry("points_r2")
    onb = orthonormal_gauge(conn, eps, rng)
    _, M = tautological_connection(exp_section_2jet(onb), onb.chart, onb.fmap)
    assert (M - onb.theta).is_syntactic_zero()
    RM = M.d() + M.wedge(M)
    assert (RM - curvature(onb)).is_syntactic_zero()


@pytest.mark.parametrize("name", ["points_r2", "zexp"])
def test_metric_connection_curvature_is_antisymmetric(name, rng):
    _, _, conn, eps = geometry(name)
    R = curvature(metric_connection(conn, eps, rng))
    assert (R + R.transpose()).is_syntactic_zero()


def test_exponential_section_refuses_non_bott():
    _, _, conn, _ = geometry("r4_contrast")
    with pytest.raises(PreconditionError):
        exp_section_2jet(conn)


def test_orthonormalizer():
    x = sp.Symbol("x")
    eps = sp.Matrix([[2, 1], [1, 1 + x**2]])
    P = orthonormalizer(eps, ["x"])
    assert sp.simplify(P.T * eps * P - sp.eye(2)) == sp.zeros(2)


def test_orthonormalizer_ambiguous_pivot():
    with pytest.raises(OrthonormalizationAmbiguousError):
        orthonormalizer(sp.Matrix([[1, 1], [1, 1]]), ["x"])


@pytest.mark.parametrize("name", ["paraboloid_pullback", "paraboloid_graph", "saddle_pullback", "zexp"])
def test_adapted_geometries(name, rng):
    atlas, geoms, _, _ = geometry(name)
    report = adapted_check(atlas, geoms, rng=rng)
    assert report.all_passed, [(e.name, e.detail) for e in report]


def test_naive_metric_is_not_adapted(rng):
    atlas, geoms, _, _ = geometry("paraboloid_naive")
    report = adapted_check(atlas, geoms, rng=rng)
    bad = report.failures()
    assert bad and bad[0].witness == {"x": 0, "y": 0}
