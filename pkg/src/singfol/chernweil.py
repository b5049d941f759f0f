"""The characteristic map lambda: WO_q -> forms, Bott vanishing and Godbillon-Vey forms.

Everything is computed in the eps-orthonormal frame produced by Gram-Schmidt,
where the connection ``theta`` and its metric part ``theta_eps`` share a frame
and the difference tensor is a plain matrix difference.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from typing import Mapping, Sequence

import sympy as sp

from .errors import PreconditionError
from .exterior import (Chart, DiffForm, MatrixForm, TPolyMatrix, _zero_of_degree, integrate_t01,
                       matrix_power_wedge, wedge_all)
from .expr import evaluate, inverse, normalize, sample_point
from .foliation import Atlas
from .geometry import (Connection, curvature, is_bott, metric_connection, orthonormal_gauge,
                       pullback_geometry, singular_points, smooth_extension_status)
from .report import Report, Status, combine, status_from_zero
from .woq import WOElement, WOMonomial, h_indices


@dataclass(frozen=True)
class CWFrame:
    """A connection and its eps-metric part expressed in one orthonormal frame."""

    onb: Connection
    metric: Connection
    eps: sp.Matrix

    @property
    def chart(self) -> Chart:
        return self.onb.chart

    @property
    def q(self) -> int:
        return self.onb.q


def prepare(conn: Connection, eps_h: sp.Matrix, rng: random.Random | None = None) -> CWFrame:
    onb = orthonormal_gauge(conn, eps_h, rng)
    return CWFrame(onb, metric_connection(onb, eps_h, rng), sp.Matrix(eps_h))


def _as_connection(data) -> Connection:
    return data.onb if isinstance(data, CWFrame) else data


def lambda_c(i: int, data) -> DiffForm:
    """Tr(R^i)."""
    conn = _as_connection(data)
    if 2 * i > conn.chart.dim:
        return _zero_of_degree(conn.chart, 2 * i)
    return matrix_power_wedge(curvature(conn), i).trace()


def lambda_h(i: int, data: CWFrame) -> DiffForm:
    """i * int_0^1 Tr(beta ^ R_t^(i-1)) dt with theta_t = theta_eps + t beta."""
    if i % 2 == 0:
        raise ValueError("h_i is defined for odd i only")
    chart = data.chart
    if 2 * i - 1 > chart.dim:
        return _zero_of_degree(chart, 2 * i - 1)
    theta, theta_eps = data.onb.theta, data.metric.theta
    beta = theta - theta_eps
    if i == 1:
        return beta.trace()
    theta_t = TPolyMatrix.linear(theta_eps, beta)
    r_t = theta_t.d() + theta_t.wedge(theta_t)
    integrand = TPolyMatrix.linear(beta, MatrixForm.zero(chart, data.q, 1))
    for _ in range(i - 1):
        integrand = integrand.wedge(r_t)
    return integrate_t01(integrand.trace()).scale(i)


def lambda_monomial(m: WOMonomial, data: CWFrame) -> DiffForm:
    factors = [lambda_h(j, data) for j in m.h]
    for i, a in enumerate(m.c):
        factors += [lambda_c(i + 1, data)] * a
    if not factors:
        return DiffForm.scalar(data.chart, 1)
    return wedge_all(factors, data.chart)


def lambda_element(x: WOElement, data: CWFrame) -> DiffForm:
    """Multiplicative extension to WO_q; homogeneous elements only."""
    degs = {m.degree for m in x.terms}
    if len(degs) > 1:
        raise ValueError("inhomogeneous element")
    degree = degs.pop() if degs else 0
    acc = {}
    for m, v in x.terms.items():
        f = lambda_monomial(m, data)
        for k, c in f.terms.items():
            acc[k] = acc.get(k, 0) + sp.Rational(v.numerator, v.denominator) * c
    if degree > data.chart.dim:
        return _zero_of_degree(data.chart, degree)
    return DiffForm(data.chart, acc, degree)


def _form_check(report: Report, name: str, form: DiffForm, samples: int, rng: random.Random,
                domain: Sequence = ()) -> Status:
    z = form.zero_test(samples=samples, rng=rng, domain=domain)
    status = status_from_zero(z)
    if status is Status.PASS_EXACT:
        detail = "proven zero"
    elif status is Status.FAIL:
        detail = f"nonzero, |value|={z.max_abs:.6g}"
    else:
        detail = f"not decided (max |value|={z.max_abs:.3g})"
    report.check(name, status, detail, z.witness if status is Status.FAIL else None)
    return status


def chain_map_check(data: CWFrame, samples: int = 25, rng: random.Random | None = None,
                    domain: Sequence = ()) -> Report:
    """d lambda(c_i) = 0 and d lambda(h_j) = lambda(c_j)."""
    rng = rng if rng is not None else random.Random(0)
    report = Report()
    for i in range(1, data.q + 1):
        c = lambda_c(i, data)
        _form_check(report, f"d(lambda(c{i}))=0", c.d(), samples, rng, domain)
    for j in h_indices(data.q):
        h = lambda_h(j, data)
        _form_check(report, f"d(lambda(h{j}))=lambda(c{j})", h.d() - lambda_c(j, data), samples, rng, domain)
    return report


def high_c_monomials(q: int, n: int) -> list[WOMonomial]:
    """c-monomials of degree in (2q, n]: those Bott vanishing speaks about."""
    out = []
    for a in itertools.product(*(range(n // (2 * (i + 1)) + 1) for i in range(q))):
        m = WOMonomial(tuple(a))
        if 2 * q < m.c_degree <= n:
            out.append(m)
    return sorted(out, key=lambda m: (m.c_degree, tuple(-x for x in m.c)))


def _c_product(m: WOMonomial, conn: Connection) -> DiffForm:
    factors = []
    for i, a in enumerate(m.c):
        factors += [lambda_c(i + 1, conn)] * a
    return wedge_all(factors, conn.chart)


def bott_vanishing_check(conn: Connection, contrast: Connection | None = None, samples: int = 25,
                         rng: random.Random | None = None) -> Report:
    """lambda of every c-monomial above degree 2q vanishes for a Bott connection."""
    rng = rng if rng is not None else random.Random(0)
    bott = is_bott(conn, samples=samples, rng=rng)
    if not bott.all_passed:
        raise PreconditionError("Bott vanishing needs a Bott connection; is_bott does not pass")
    report = Report()
    monos = high_c_monomials(conn.q, conn.chart.dim)
    if not monos:
        report.check("bott-vanishing", Status.PASS_EXACT, f"no c-monomial of degree in ({2 * conn.q}, {conn.chart.dim}]")
    for m in monos:
        _form_check(report, f"bott-vanishing[{m.text()}]", _c_product(m, conn), samples, rng)
    if contrast is not None:
        for m in monos:
            form = _c_product(m, contrast)
            z = form.zero_test(samples=samples, rng=rng)
            if z.status.name == "PROVEN_NONZERO":
                report.check(f"contrast-nonzero[{m.text()}]", Status.PASS_EXACT,
                             "non-Bott connection gives a nonzero form", z.witness)
            else:
                report.check(f"contrast-nonzero[{m.text()}]", Status.UNDECIDED, "no nonzero witness found")
            report.emit_form(f"contrast[{m.text()}]", form.to_text())
    return report


# ---------------------------------------------------------------- Godbillon-Vey

@dataclass(frozen=True)
class GVResult:
    omega: DiffForm
    eta: DiffForm
    gv: DiffForm
    report: Report


def gv_algorithm(data: CWFrame, samples: int = 25, rng: random.Random | None = None,
                 domain: Sequence = ()) -> GVResult:
    """omega = det(P^{-1}) df^1 ^ ... ^ df^q, eta = -Tr(theta_onb), gv = (-1)^(q+1) eta ^ (d eta)^q."""
    rng = rng if rng is not None else random.Random(0)
    onb = data.onb
    chart, q = onb.chart, onb.q
    det = normalize(inverse(onb.frame).det(method="berkowitz"))
    dfs = [DiffForm.scalar(chart, f).d() for f in onb.fmap]
    omega = wedge_all(dfs, chart).scale(det)
    eta = -onb.theta.trace()
    deta = eta.d()
    gv = wedge_all([eta] + [deta] * q, chart).scale((-1) ** (q + 1))
    report = Report()
    _form_check(report, "d(omega)=eta^omega", omega.d() - eta.wedge(omega), samples, rng, domain)
    _form_check(report, "d(gv)=0", gv.d(), samples, rng, domain)
    target = WOElement.h(1, q) * _c1_power(q)
    _form_check(report, f"gv=lambda({target.text()})", gv - lambda_element(target, data), samples, rng, domain)
    return GVResult(omega, eta, gv, report)


def _c1_power(q: int) -> WOElement:
    out = WOElement.one(q)
    for _ in range(q):
        out = out * WOElement.c(1, q)
    return out


# ---------------------------------------------------------------- smoothness, overlaps, naturality

def extension_report(forms: Mapping[str, DiffForm], atlas: Atlas, chart_name: str | None = None,
                     rng: random.Random | None = None, rays: int = 5, grid: int = 5) -> Report:
    """Do the forms extend smoothly across the singular set of the chart?"""
    rng = rng if rng is not None else random.Random(0)
    from .foliation import singular_locus
    locus = singular_locus(atlas)
    fc = atlas.chart(chart_name) if chart_name else atlas.charts[0]
    pts = singular_points(fc, locus.chart_minors(fc.name), grid)
    report = Report()
    for name, form in forms.items():
        coeffs = {f"{name}[{','.join(fc.coords[i] for i in k) or '1'}]": v for k, v in form.terms.items()}
        status, detail, witness = smooth_extension_status(coeffs, fc.chart, pts, rng, rays)
        report.check(f"extends[{name}]", status, detail, witness)
    return report


def overlap_coherence(atlas: Atlas, forms: Mapping[str, Mapping[str, DiffForm]], samples: int = 25,
                      rng: random.Random | None = None) -> Report:
    """forms[chart][name]: the chart-a form pulled back to chart b must equal the chart-b form."""
    rng = rng if rng is not None else random.Random(0)
    report = Report()
    for (a, b) in sorted(atlas.transitions):
        psi = atlas.coordinate_change(a, b)
        cb = atlas.chart(b).chart
        domain = atlas.overlap_domain(a, b)
        for name in forms[a]:
            fa = forms[a][name]
            moved = fa.pullback(psi, cb) if fa.degree <= cb.dim else fa
            diff = _rechart(moved, cb) - _rechart(forms[b][name], cb)
            _form_check(report, f"overlap[{a},{b}][{name}]", diff, samples, rng, domain)
    return report


def _rechart(f: DiffForm, chart: Chart) -> DiffForm:
    if f.chart == chart:
        return f
    return DiffForm(chart, f.terms, f.degree) if f.chart.coords == chart.coords else f


def naturality_check(phi: Sequence, source: Chart, conn: Connection, eps_h: sp.Matrix,
                     elements: Sequence[WOElement], samples: int = 25,
                     rng: random.Random | None = None) -> Report:
    """lambda of the pulled-back geometry equals the pullback of lambda."""
    rng = rng if rng is not None else random.Random(0)
    report = Report()
    upstairs = prepare(conn, eps_h, rng)
    c2, e2 = pullback_geometry(phi, source, conn, eps_h)
    downstairs = prepare(c2, e2, rng)
    for x in elements:
        lhs = lambda_element(x, downstairs)
        up = lambda_element(x, upstairs)
        rhs = up.pullback(phi, source) if up.degree <= source.dim else _zero_of_degree(source, up.degree)
        if lhs.degree > source.dim:
            report.check(f"naturality[{x.text()}]", Status.PASS_EXACT, "degree exceeds source dimension")
            continue
        _form_check(report, f"naturality[{x.text()}]", lhs - rhs, samples, rng)
    return report


def generators(q: int) -> list[WOElement]:
    return [WOElement.c(i, q) for i in range(1, q + 1)] + [WOElement.h(j, q) for j in h_indices(q)]


def orientation_check(atlas: Atlas, samples: int = 10, rng: random.Random | None = None) -> Report:
    """Transition Jacobian determinants are positive at sampled overlap points."""
    rng = rng if rng is not None else random.Random(0)
    report = Report()
    for (a, b), t in sorted(atlas.transitions.items()):
        jac = sp.Matrix([[sp.diff(h, sp.Symbol(v)) for v in t.variables] for h in t.hmap])
        det = normalize(jac.det(method="berkowitz"))
        signs = []
        for _ in range(samples):
            pt = sample_point(t.variables, rng, t.domain)
            if pt is None:
                break
            signs.append(evaluate(det, pt) > 0)
        ok = bool(signs) and all(signs)
        report.check(f"oriented[{a},{b}]", Status.PASS_NUMERIC if ok else Status.FAIL,
                     f"transition determinant {'positive' if ok else 'not positive'} at {len(signs)} sample(s)")
    return report


def chern_weil_report(data: CWFrame, samples: int = 25, rng: random.Random | None = None) -> Report:
    """All lambda(c_i), lambda(h_j) as forms, plus chain-map entries."""
    report = Report()
    for i in range(1, data.q + 1):
        report.emit_form(f"lambda(c{i})", lambda_c(i, data).to_text())
    for j in h_indices(data.q):
        report.emit_form(f"lambda(h{j})", lambda_h(j, data).to_text())
    report.extend(chain_map_check(data, samples, rng))
    return report


__all__ = [
    "CWFrame", "GVResult", "prepare", "lambda_c", "lambda_h", "lambda_monomial", "lambda_element",
    "chain_map_check", "bott_vanishing_check", "high_c_monomials", "gv_algorithm", "extension_report",
    "overlap_coherence", "naturality_check", "generators", "orientation_check", "chern_weil_report",
    "combine",
]
