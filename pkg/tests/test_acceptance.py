"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` or ``python3 tests/test_acceptance.py``.
"""
import glob
import itertools
import os
import random
import subprocess
import sys

import pytest
import sympy as sp

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from conftest import CORPUS, corpus, corpus_path  # noqa: E402
from singfol import chernweil as cw  # noqa: E402
from singfol import gelfandfuks as gf  # noqa: E402
from singfol import woq  # noqa: E402
from singfol.cli import Options, emit, run  # noqa: E402
from singfol.dsl import build_atlas, build_geometries, load  # noqa: E402
from singfol.exterior import Chart, DiffForm, MatrixForm, parse_form  # noqa: E402
from singfol.foliation import singular_locus, verify_cocycle  # noqa: E402
from singfol.geometry import (adapted_check, exp_section_2jet, is_bott, orthonormal_gauge,  # noqa: E402
                              singular_points, tautological_connection, torsion)
from singfol.jets import JetMap, compose_jets, invert_jet, jets_equal, multi_indices_upto  # noqa: E402


class Outcome:
    def __init__(self):
        self.failures = []

    def expect(self, ok, what):
        if not ok:
            self.failures.append(what)


def announce(capsys, number, title, outcome):
    status = "PASS" if not outcome.failures else "FAIL"
    line = f"[{status}] {number:>2}. {title}"
    if outcome.failures:
        line += " :: " + "; ".join(outcome.failures[:5])
    if capsys is None:
        print(line)
    else:
        with capsys.disabled():
            print("\n" + line)
    assert not outcome.failures, line


def corpus_files():
    return sorted(os.path.splitext(os.path.basename(p))[0] for p in glob.glob(os.path.join(CORPUS, "*.fol")))


# ---------------------------------------------------------------- 1

def criterion_01_structure_equations(capsys=None):
    out = Outcome()
    for q in (1, 2, 3):
        for name, residual in gf.structure_equation_residuals(q):
            out.expect(residual.is_zero(), f"q={q} {name} symbolic")
        d1 = [gf.delta_lower(q, i) for i in range(q)]
        d2 = [[gf.delta_lower(q, i, j) for j in range(q)] for i in range(q)]
        first = [[d2[i][j].wedge(d1[j]) for j in range(q)] for i in range(q)]
        second = [[[gf.delta_lower(q, i, j, k).wedge(d1[k]) + d2[i][k].wedge(d2[k][j]) for k in range(q)]
                   for j in range(q)] for i in range(q)]
        for X, Y in itertools.combinations(gf.basis(q, 3), 2):
            for i in range(q):
                v = gf.ce_evaluate_direct(d1[i], [X, Y]) + sum(t.evaluate([X, Y]) for t in first[i])
                out.expect(v == 0, f"q={q} first[{i}] on {X},{Y}")
                for j in range(q):
                    v = gf.ce_evaluate_direct(d2[i][j], [X, Y]) + sum(t.evaluate([X, Y]) for t in second[i][j])
                    out.expect(v == 0, f"q={q} second[{i},{j}] on {X},{Y}")
    announce(capsys, 1, "Gel'fand-Fuks structure equations", out)


# ---------------------------------------------------------------- 2

def criterion_02_universal_cocycles(capsys=None):
    out = Outcome()
    for q in (1, 2):
        for i in range(1, q + 1):
            c = gf.universal_c(i, q)
            out.expect(gf.ce_differential(c).is_zero(), f"dc{i}=0 q={q}")
            out.expect(all(b.passed for b in gf.check_oq_basic(c)), f"c{i} basic q={q}")
            out.expect(c.max_label_order() <= 2, f"c{i} labels q={q}")
        h1 = gf.universal_h(1, q)
        out.expect((gf.ce_differential(h1) - gf.universal_c(1, q)).is_zero(), f"dh1=c1 q={q}")
        out.expect(all(b.passed for b in gf.check_oq_basic(h1)), f"h1 basic q={q}")
        out.expect(h1.max_label_order() <= 2, f"h1 labels q={q}")
    announce(capsys, 2, "universal cocycles c_i, h_1", out)


# ---------------------------------------------------------------- 3

def criterion_03_ce_complex(capsys=None):
    out = Outcome()
    for q in (1, 2):
        labels = gf.basis(q, 2)
        for p in (0, 1, 2, 3):
            for key in itertools.combinations(labels, p):
                c = gf.GFCochain(q, 2 if p else 0, p, {key: 1})
                out.expect(gf.ce_differential(gf.ce_differential(c, 4), 4).is_zero(), f"d^2 {key}")
    for q in (1, 2):
        monos = gf.basis(q, 2)
        for X, Y, Z in itertools.product(monos, repeat=3):
            x, y, z = {X: 1}, {Y: 1}, {Z: 1}
            total = {}
            for a, b, c in ((x, y, z), (y, z, x), (z, x, y)):
                for l, v in gf.bracket(a, gf.bracket(b, c)).items():
                    total[l] = total.get(l, 0) + v
            out.expect(all(v == 0 for v in total.values()), f"Jacobi {X},{Y},{Z}")
    announce(capsys, 3, "Chevalley-Eilenberg d^2 = 0 and Jacobi identity", out)


# ---------------------------------------------------------------- 4

def criterion_04_wo_cohomology(capsys=None):
    from wo_oracle import betti
    out = Outcome()
    groups = woq.wo_cohomology(1)
    out.expect(tuple(g.betti for g in groups) == (1, 0, 0, 1), "q=1 Betti")
    out.expect(tuple(g.betti for g in groups) == betti(1), "q=1 oracle")
    out.expect([r.text() for r in groups[3].representatives] == ["h1*c1"], "q=1 representative")
    gv2 = woq.parse_element("h1*c1^2", 2)
    out.expect(woq.wo_differential(gv2).is_zero() and not woq.is_exact(gv2), "[h1 c1^2] nonzero")
    out.expect(tuple(g.betti for g in woq.wo_cohomology(2)) == betti(2), "q=2 oracle")
    for q in (1, 2, 3):
        for m in woq.monomials(q):
            if m.survives():
                out.expect(woq.wo_differential(woq.wo_differential(woq.WOElement.monomial(m))).is_zero(),
                           f"d^2 {m.text()}")
    for q in (1, 2):
        for m in woq.monomials(q):
            if m.survives():
                x = woq.WOElement.monomial(m)
                diff = gf.ce_differential(woq.embed_gf(x)) - woq.embed_gf(woq.wo_differential(x), q)
                out.expect(diff.is_zero(), f"embed_gf chain map {m.text()}")
    announce(capsys, 4, "WO_q cohomology", out)


# ---------------------------------------------------------------- 5

def criterion_05_bott_vanishing(capsys=None):
    out = Outcome()
    rng = random.Random(5)
    conn, _ = corpus("r4_bott")[2]["U"]
    contrast, _ = corpus("r4_contrast")[2]["U"]
    out.expect(is_bott(conn, 10, rng).all_exact and torsion(conn, 10, rng).all_passed, "Bott connection verified")
    report = cw.bott_vanishing_check(conn, contrast=contrast, samples=10, rng=rng)
    out.expect(report.get("bott-vanishing[c1^2]").status.name == "PASS_EXACT", "lambda(c1^2)=0")
    c1 = cw.lambda_c(1, conn)
    out.expect(c1.wedge(c1).is_syntactic_zero(), "c1^2 syntactically zero")
    ch = contrast.chart
    d = {c: DiffForm.dcoord(ch, c) for c in ch.coords}
    expected = d["y"].wedge(d["x"]).wedge(d["w"]).wedge(d["z"]).scale(2)
    k1 = cw.lambda_c(1, contrast)
    out.expect((k1.wedge(k1) - expected).is_syntactic_zero(), "contrast lambda(c1^2) = 2 dy^dx^dw^dz")
    out.expect(not expected.is_syntactic_zero(), "contrast nonzero")
    announce(capsys, 5, "Bott vanishing and non-Bott contrast", out)


# ---------------------------------------------------------------- 6

def criterion_06_chern_weil_chain_map(capsys=None):
    out = Outcome()
    rng = random.Random(6)
    regular = singular = 0
    for name in corpus_files():
        doc, atlas, geoms = corpus(name)
        locus = singular_locus(atlas)
        for fc in atlas.charts:
            conn, eps = geoms[fc.name]
            data = cw.prepare(conn, eps, rng)
            report = cw.chain_map_check(data, 10, rng)
            out.expect(report.all_exact, f"{name}/{fc.name}")
            if singular_points(fc, locus.chart_minors(fc.name)):
                singular += 1
            else:
                regular += 1
    out.expect(regular >= 3 and singular >= 1, f"coverage {regular} regular, {singular} singular")
    announce(capsys, 6, f"Chern-Weil chain map on {regular} regular and {singular} singular charts", out)


# ---------------------------------------------------------------- 7

def criterion_07_godbillon_vey(capsys=None):
    out = Outcome()
    rng = random.Random(7)
    checked = 0
    for name in corpus_files():
        doc, atlas, geoms = corpus(name)
        if atlas.q != 1:
            continue
        for fc in atlas.charts:
            conn, eps = geoms[fc.name]
            if not (torsion(conn, 10, rng).all_passed and is_bott(conn, 10, rng).all_passed):
                refused = run(doc, "gv", Options())
                out.expect(bool(refused.failures()), f"{name} not refused")
                continue
            res = cw.gv_algorithm(cw.prepare(conn, eps, rng), 10, rng)
            out.expect(res.report.all_exact, f"{name}/{fc.name}: " + ", ".join(
                e.name for e in res.report if e.status.name != "PASS_EXACT"))
            checked += 1
    res = cw.gv_algorithm(cw.prepare(*corpus("trivial_dz")[2]["U"], rng), 10, rng)
    out.expect(res.eta.is_syntactic_zero() and res.gv.is_syntactic_zero(), "trivial foliation eta, gv")
    out.expect((res.omega.d()).is_syntactic_zero(), "trivial foliation d(omega)")
    out.expect(checked >= 4, f"only {checked} examples")
    announce(capsys, 7, f"Godbillon-Vey algorithm on {checked} codimension-1 charts", out)


# ---------------------------------------------------------------- 8

def criterion_08_singular_pipeline(capsys=None):
    out = Outcome()
    rng = random.Random(8)
    for name in ("paraboloid_pullback", "paraboloid_graph"):
        doc, atlas, geoms = corpus(name)
        out.expect(adapted_check(atlas, geoms, rng=rng).all_passed, f"{name} adapted")
        fc = atlas.charts[0]
        data = cw.prepare(*geoms[fc.name], rng)
        out.expect(cw.lambda_c(1, data).is_syntactic_zero(), f"{name} lambda(c1)=0")
        res = cw.gv_algorithm(data, 10, rng)
        forms = {"lambda(h1)": cw.lambda_h(1, data), "omega": res.omega, "eta": res.eta, "gv": res.gv}
        report = cw.extension_report(forms, atlas, fc.name, rng=rng)
        out.expect(report.all_passed, f"{name} extension " + ", ".join(e.name for e in report.failures()))
    doc, atlas, geoms = corpus("paraboloid_naive")
    bad = adapted_check(atlas, geoms, rng=rng).failures()
    out.expect(bool(bad) and bad[0].witness is not None, "naive metric must fail with a witness")
    announce(capsys, 8, "singular pipeline on x^2+y^2", out)


# ---------------------------------------------------------------- 9

def criterion_09_exponential_section(capsys=None):
    out = Outcome()
    rng = random.Random(9)
    conn, eps = corpus("points_r2")[2]["P"]
    base = exp_section_2jet(conn)
    done = 0
    while done < 10:
        C = sp.Matrix(2, 2, lambda i, j: sp.Rational(rng.randint(-4, 4), rng.randint(1, 4)))
        if C.det() == 0:
            continue
        out.expect(jets_equal(exp_section_2jet(conn, frame=C), compose_jets(base, JetMap.linear(C, 2))),
                   f"equivariance {list(C)}")
        done += 1
    for name in ("zexp", "r4_bott", "trivial_dz"):
        c, _ = corpus(name)[2]["U"]
        ch = c.chart
        k = ch.dim - c.q
        aux = MatrixForm([[DiffForm.one_form(ch, [sp.Rational(rng.randint(-3, 3), rng.randint(1, 3)) * s
                                                   for s in ch.symbols]) for _ in range(k)] for _ in range(k)])
        out.expect(jets_equal(exp_section_2jet(c), exp_section_2jet(c, aux=aux)), f"aux independence {name}")
    onb = orthonormal_gauge(conn, eps, rng)
    _, M = tautological_connection(exp_section_2jet(onb), onb.chart, onb.fmap)
    out.expect((M - onb.theta).is_syntactic_zero(), "tautological connection")
    announce(capsys, 9, "exponential section: equivariance, aux independence, connection form", out)


# ---------------------------------------------------------------- 10

def criterion_10_naturality(capsys=None):
    out = Outcome()
    rng = random.Random(10)
    for name in ("paraboloid_pullback", "saddle_pullback"):
        doc = load(corpus_path(name))
        _, phi, _, tdoc = doc.geometry
        conn, eps = next(iter(build_geometries(tdoc).values()))
        source = Chart(doc.charts[0].name, doc.charts[0].coords)
        elements = cw.generators(1) + [woq.WOElement.h(1, 1) * woq.WOElement.c(1, 1)]
        report = cw.naturality_check(phi, source, conn, eps, elements, samples=10, rng=rng)
        out.expect(report.all_exact, f"{name}: " + ", ".join(e.name for e in report if not e.status.name == "PASS_EXACT"))
    announce(capsys, 10, "naturality under pullback", out)


# ---------------------------------------------------------------- 11

def _random_form(chart, degree, rng):
    syms = chart.symbols
    terms = {}
    for idx in rng.sample(list(itertools.combinations(range(chart.dim), degree)),
                          rng.randint(1, len(list(itertools.combinations(range(chart.dim), degree))))):
        terms[idx] = sum(rng.randint(-5, 5) * sp.Mul(*[s**rng.randint(0, 3) for s in syms]) for _ in range(3))
    return DiffForm(chart, terms, degree)


def _random_jet(q, k, rng):
    while True:
        L = sp.Matrix(q, q, lambda i, j: sp.Rational(rng.randint(-3, 3), rng.randint(1, 3)))
        if L.det() != 0:
            break
    coeffs = tuple({a: (L[i, a.index(1)] if sum(a) == 1 else sp.Rational(rng.randint(-4, 4), rng.randint(1, 4)))
                    for a in multi_indices_upto(q, k)} for i in range(q))
    zero = (sp.Integer(0),) * q
    return JetMap(zero, zero, k, coeffs)


def criterion_11_infrastructure(capsys=None):
    out = Outcome()
    rng = random.Random(11)
    chart = Chart("U", ("x", "y", "z", "w"))
    for n in range(100):
        f = _random_form(chart, rng.randint(0, 2), rng)
        out.expect(f.d().d().is_syntactic_zero(), f"d^2 on form {n}")
    for q in (1, 2, 3):
        for k in (2, 3):
            e = JetMap.identity(q, k)
            a, b, c = (_random_jet(q, k, rng) for _ in range(3))
            out.expect(jets_equal(compose_jets(a, compose_jets(b, c)), compose_jets(compose_jets(a, b), c)),
                       f"associativity q={q} k={k}")
            out.expect(jets_equal(compose_jets(a, e), a) and jets_equal(compose_jets(e, a), a), f"unit q={q}")
            ai = invert_jet(a)
            out.expect(jets_equal(compose_jets(a, ai), e) and jets_equal(compose_jets(ai, a), e), f"inverse q={q}")
    out.expect(verify_cocycle(corpus("two_chart_good")[1], 25, rng).all_exact, "matched atlas")
    bad = verify_cocycle(corpus("two_chart_bad")[1], 25, rng).failures()
    out.expect(bool(bad) and bad[0].witness is not None, "corrupted atlas")
    args = ["chern-weil", corpus_path("zexp_two_chart"), "--seed", "3", "--format", "lines"]
    runs = [subprocess.run([sys.executable, "-m", "singfol.cli", *args], capture_output=True, check=False,
                           env=dict(os.environ, PYTHONHASHSEED=str(h))).stdout for h in (0, 1)]
    out.expect(runs[0] == runs[1] and bool(runs[0]), "CLI determinism")
    emitted = 0
    for name in corpus_files():
        doc = load(corpus_path(name))
        atlas = build_atlas(doc)
        charts = {c.name: c.chart for c in atlas.charts}
        for command in ("chern-weil", "gv"):
            text = emit(run(doc, command, Options(samples=10)), "lines")
            for line in text.splitlines():
                if not line.startswith("FORM "):
                    continue
                label, body = line[5:].split(" = ", 1)
                ch = charts[label.split("/")[0]] if "/" in label else atlas.charts[0].chart
                out.expect(parse_form(body, ch).to_text() == body, f"round trip {name} {label}")
                emitted += 1
    out.expect(emitted > 0, "no forms emitted")
    announce(capsys, 11, f"infrastructure (d^2, jet groups, cocycles, determinism, {emitted} round trips)", out)


CRITERIA = [v for k, v in sorted(globals().items()) if k.startswith("criterion_")]


@pytest.mark.parametrize("criterion", CRITERIA, ids=[c.__name__[len("criterion_"):] for c in CRITERIA])
def test_acceptance(criterion, capsys):
    criterion(capsys)


if __name__ == "__main__":
    failed = 0
    for fn in CRITERIA:
        try:
            fn(None)
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
