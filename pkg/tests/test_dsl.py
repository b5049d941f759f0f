import pytest
import sympy as sp

from conftest import corpus_path
from singfol.dsl import build_atlas, build_geometries, load, parse_spec
from singfol.errors import SpecSemanticError, SpecSyntaxError

BASE = """manifold R3 dim=3
codim 1
chart U coords=(x,y,z) map=(z*exp(-x))
"""


def test_minimal_document():
    doc = parse_spec(BASE)
    atlas = build_atlas(doc)
    assert (atlas.n, atlas.q) == (3, 1)
    conn, eps = build_geometries(doc)["U"]
    assert conn.q == 1 and eps.shape == (1, 1)


def test_metric_and_euclid_blocks():
    doc = parse_spec(BASE + "metric [[1,0,0],[0,1,0],[0,0,1+x^2]]\neuclid [[2]]\n")
    conn, eps = build_geometries(doc)["U"]
    assert eps == sp.Matrix([[2]])


@pytest.mark.parametrize("text,line,col", [
    ("manifold R3 dim=3\ncodim 1\nchart U coords=(x,y,z) map=(zz)\n", 3, 29),
    ("manifold R3 dim=3\ncodim 1\nchart U coords=(x,y,z) map=(z*)\n", 3, 31),
])
def test_errors_carry_positions(text, line, col):
    with pytest.raises((SpecSyntaxError, SpecSemanticError)) as info:
        parse_spec(text)
    assert (info.value.line, info.value.col) == (line, col)


def test_unknown_statement():
    with pytest.raises(SpecSyntaxError):
        parse_spec(BASE + "frobnicate 3\n")


def test_missing_codim():
    with pytest.raises(SpecSemanticError):
        parse_spec("manifold R dim=1\nchart U coords=(x) map=(x)\n")


def test_unknown_chart_in_transition():
    with pytest.raises(SpecSemanticError):
        parse_spec(BASE + "transition U W vars=(s) map=(s)\n")


def test_wrong_connection_size():
    with pytest.raises(SpecSemanticError):
        parse_spec(BASE + "connection [[dx, dy],[dz, dx]]\n")


def test_pullback_document_resolves_target():
    doc = load(corpus_path("saddle_pullback"))
    atlas = build_atlas(doc)
    u, v = sp.symbols("u v")
    assert sp.simplify(atlas.charts[0].fmap[0] - u * v * sp.exp(-u)) == 0


def test_comments_and_blank_lines():
    doc = parse_spec("# header\n\n" + BASE.replace("codim 1", "codim 1   # one"))
    assert doc.q == 1
