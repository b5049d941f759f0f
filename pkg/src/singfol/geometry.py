"""Connections and Euclidean structures on the normal bundle of a foliated chart.

Conventions. The Haefliger frame ``e_i`` of the normal bundle is the one with
``df(e_i) = d/ds^i``. A :class:`Connection` stores a q x q matrix ``theta`` of
1-forms and the matrix ``B`` of its own frame ``n_j = sum_i e_i B^i_j``; then
``nabla n_j = theta^i_j n_i``, the coframe is ``omega = B^{-1} df``, the curvature
is ``d theta + theta ^ theta`` and the torsion ``d omega + theta ^ omega``.
Euclidean structures are always given in the Haefliger frame.
"""
from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np
import sympy as sp

from .errors import (DimensionMismatchError, EvaluationDomainError, OrthonormalizationAmbiguousError,
                     PreconditionError)
from .exterior import Chart, DiffForm, MatrixForm, _sum_forms, vf_apply, vf_bracket
from .expr import (ZERO, ZeroStatus, as_expr, evaluate, inverse, normalize, normalize_matrix,
                   sample_point, singular_subterms, substitute, zero_test)
from .foliation import Atlas, FoliatedChart, choose_pivots, kernel_fields, singular_locus
from .jets import JetMap, factorial, multi_indices_upto
from .report import Report, Status, combine, format_point, status_from_zero


# ---------------------------------------------------------------- basic data

@dataclass(frozen=True)
class Metric:
    chart: Chart
    g: sp.Matrix

    def __post_init__(self):
        g = normalize_matrix(sp.Matrix(self.g))
        if g.shape != (self.chart.dim, self.chart.dim):
            raise DimensionMismatchError("metric size differs from chart dimension")
        if any(normalize(g[i, j] - g[j, i]) != 0 for i in range(g.rows) for j in range(i)):
            raise ValueError("metric is not symmetric")
        object.__setattr__(self, "g", g)

    @classmethod
    def euclidean(cls, chart: Chart) -> "Metric":
        return cls(chart, sp.eye(chart.dim))

    def positive_at_samples(self, samples: int = 10, rng: random.Random | None = None,
                            domain: Sequence = ()) -> bool:
        return positive_definite_at_samples(self.g, self.chart.coords, samples, rng, domain)


def positive_definite_at_samples(m: sp.Matrix, names: Sequence[str], samples: int = 10,
                                 rng: random.Random | None = None, domain: Sequence = ()) -> bool:
    """Leading principal minors positive at random points."""
    rng = rng if rng is not None else random.Random(0)
    minors = [normalize(m[:k, :k].det(method="berkowitz")) for k in range(1, m.rows + 1)]
    for _ in range(samples):
        pt = sample_point(names, rng, domain)
        if pt is None:
            return False
        try:
            if any(evaluate(d, pt) <= 0 for d in minors):
                return False
        except EvaluationDomainError:
            continue
    return True


@dataclass(frozen=True)
class Connection:
    chart: Chart
    fmap: tuple[sp.Expr, ...]
    theta: MatrixForm
    frame: sp.Matrix  # columns: the connection's frame in the Haefliger frame

    @property
    def q(self) -> int:
        return len(self.fmap)

    @classmethod
    def flat(cls, fchart: FoliatedChart) -> "Connection":
        q = len(fchart.fmap)
        return cls(fchart.chart, fchart.fmap, MatrixForm.zero(fchart.chart, q, 1), sp.eye(q))

    @classmethod
    def haefliger(cls, fchart: FoliatedChart, theta: MatrixForm) -> "Connection":
        return cls(fchart.chart, tuple(fchart.fmap), theta, sp.eye(len(fchart.fmap)))

    def df(self) -> sp.Matrix:
        return sp.Matrix([[normalize(sp.diff(f, s)) for s in self.chart.symbols] for f in self.fmap])

    def coframe(self) -> list[DiffForm]:
        """omega = B^{-1} df."""
        Binv = inverse(self.frame)
        dfs = [DiffForm.scalar(self.chart, f).d() for f in self.fmap]
        return [_lincomb([Binv[i, k] for k in range(self.q)], dfs, self.chart) for i in range(self.q)]


def _lincomb(coefs: Sequence, forms: Sequence[DiffForm], chart: Chart, degree: int = 1) -> DiffForm:
    acc: dict = {}
    for c, f in zip(coefs, forms):
        c = as_expr(c)
        if c == 0:
            continue
        for k, v in f.terms.items():
            acc[k] = acc.get(k, ZERO) + c * v
    return DiffForm(chart, acc, degree)


def jacobian(fmap: Sequence, chart: Chart) -> sp.Matrix:
    return sp.Matrix([[normalize(sp.diff(as_expr(f), s)) for s in chart.symbols] for f in fmap])


def normal_gram(fmap: Sequence, chart: Chart, g: sp.Matrix | None = None) -> sp.Matrix:
    """G = df g^{-1} df^T."""
    df = jacobian(fmap, chart)
    ginv = sp.eye(chart.dim) if g is None else inverse(g)
    return normalize_matrix(df * ginv * df.T)


def haefliger_lifts(fmap: Sequence, chart: Chart, g: sp.Matrix | None = None) -> sp.Matrix:
    """g-orthogonal lifts Y = g^{-1} df^T G^{-1} of the Haefliger frame (columns)."""
    df = jacobian(fmap, chart)
    ginv = sp.eye(chart.dim) if g is None else inverse(g)
    return normalize_matrix(ginv * df.T * inverse(normal_gram(fmap, chart, g)))


def induced_euclid(fmap: Sequence, chart: Chart, g: sp.Matrix | None = None) -> sp.Matrix:
    """Euclidean structure induced by g, in the Haefliger frame: G^{-1}."""
    return inverse(normal_gram(fmap, chart, g))


def christoffel(g: sp.Matrix, chart: Chart) -> list[list[list[sp.Expr]]]:
    """Gamma[a][b][c] = 1/2 g^{ad} (d_b g_dc + d_c g_db - d_d g_bc)."""
    n = chart.dim
    ginv = inverse(g)
    syms = chart.symbols
    dg = [[[sp.diff(g[i, j], syms[k]) for k in range(n)] for j in range(n)] for i in range(n)]
    return [[[normalize(sum(ginv[a, d] * (dg[d][c][b] + dg[d][b][c] - dg[b][c][d]) for d in range(n)) / 2)
              for c in range(n)] for b in range(n)] for a in range(n)]


# ---------------------------------------------------------------- constructions

def bott_levi_civita(g: Metric, fchart: FoliatedChart) -> Connection:
    """theta^i_j(d_A) = df^i([ (d_A)_F, Y_j ] + nabla^LC_{(d_A)_nu} Y_j), in the Haefliger frame."""
    chart = fchart.chart
    n, q = chart.dim, len(fchart.fmap)
    df = jacobian(fchart.fmap, chart)
    Y = haefliger_lifts(fchart.fmap, chart, g.g)
    P = normalize_matrix(Y * df)  # projection to the g-orthogonal complement of the leaves
    Gam = christoffel(g.g, chart)
    syms = chart.symbols
    theta_rows = [[dict() for _ in range(q)] for _ in range(q)]
    for A in range(n):
        v_nu = [P[k, A] for k in range(n)]
        v_f = [normalize((1 if k == A else 0) - P[k, A]) for k in range(n)]
        for j in range(q):
            Yj = [Y[k, j] for k in range(n)]
            br = vf_bracket(v_f, Yj, chart)
            cov = [sum(v_nu[b] * sp.diff(Yj[k], syms[b]) for b in range(n))
                   + sum(Gam[k][b][c] * v_nu[b] * Yj[c] for b in range(n) for c in range(n)) for k in range(n)]
            for i in range(q):
                val = normalize(sum(df[i, k] * (br[k] + cov[k]) for k in range(n)))
                if val != 0:
                    theta_rows[i][j][(A,)] = val
    theta = MatrixForm([[DiffForm(chart, theta_rows[i][j], 1) for j in range(q)] for i in range(q)])
    return Connection(chart, tuple(fchart.fmap), theta, sp.eye(q))


def gauge(conn: Connection, C: sp.Matrix) -> Connection:
    """Change to the frame n·C: theta' = C^{-1} theta C + C^{-1} dC."""
    C = normalize_matrix(sp.Matrix(C))
    Cinv = inverse(C)
    dC = MatrixForm([[DiffForm.scalar(conn.chart, C[i, j]).d() for j in range(C.cols)] for i in range(C.rows)])
    theta = conn.theta.right_mul(C).left_mul(Cinv) + dC.left_mul(Cinv)
    return Connection(conn.chart, conn.fmap, theta, normalize_matrix(conn.frame * C))


def to_haefliger_frame(conn: Connection) -> Connection:
    return gauge(conn, inverse(conn.frame))


def curvature(conn: Connection) -> MatrixForm:
    return conn.theta.d() + conn.theta.wedge(conn.theta)


def haefliger_christoffel(conn: Connection, lifts: sp.Matrix | None = None) -> list[list[list[sp.Expr]]]:
    """Gamma^i_{jk} = theta_H^i_j(Y_k) in the Haefliger frame."""
    th = to_haefliger_frame(conn).theta
    Y = lifts if lifts is not None else haefliger_lifts(conn.fmap, conn.chart)
    q = conn.q
    cols = [[Y[a, k] for a in range(conn.chart.dim)] for k in range(q)]
    return [[[th[i, j].on_vectors(cols[k]) for k in range(q)] for j in range(q)] for i in range(q)]


# ---------------------------------------------------------------- checks

def _frames(conn: Connection, rng: random.Random | None = None, lifts: sp.Matrix | None = None):
    """Leafwise kernel fields and normal frame fields (lifts of the connection's frame)."""
    df = conn.df()
    X = []
    if conn.q < conn.chart.dim:
        pivots, _ = choose_pivots(df, rng=rng)
        if pivots is None:
            raise PreconditionError("chart map is nowhere a submersion")
        X = kernel_fields(df, pivots)
    Y = lifts if lifts is not None else haefliger_lifts(conn.fmap, conn.chart)
    N = normalize_matrix(Y * conn.frame)
    return X, [[N[a, j] for a in range(conn.chart.dim)] for j in range(conn.q)]


def _field_report(report: Report, name: str, exprs: Sequence[tuple[str, sp.Expr]], chart: Chart,
                  samples: int, rng: random.Random):
    statuses, witness, bad = [], None, None
    for label, e in exprs:
        z = zero_test(e, samples=samples, rng=rng, names=chart.coords)
        s = status_from_zero(z)
        statuses.append(s)
        if s is Status.FAIL and bad is None:
            bad, witness = label, z.witness
    status = combine(statuses)
    detail = f"{len(statuses)} component(s)"
    if bad:
        detail += f"; nonzero at {bad}"
    report.check(name, status, detail, witness)


def torsion(conn: Connection, samples: int = 25, rng: random.Random | None = None,
            lifts: sp.Matrix | None = None) -> Report:
    """T^i(U,V) = U(omega^i(V)) - V(omega^i(U)) + theta^i_j(U) omega^j(V) - theta^i_j(V) omega^j(U) - omega^i([U,V])."""
    rng = rng if rng is not None else random.Random(0)
    X, N = _frames(conn, rng, lifts)
    fields = [(f"X{a + 1}", v) for a, v in enumerate(X)] + [(f"N{j + 1}", v) for j, v in enumerate(N)]
    omega = conn.coframe()
    chart = conn.chart
    comps = []
    for (nu, U), (nv, V) in itertools.combinations(fields, 2):
        om_u = [w.on_vectors(U) for w in omega]
        om_v = [w.on_vectors(V) for w in omega]
        th_u = conn.theta.on_vectors(U)
        th_v = conn.theta.on_vectors(V)
        br = vf_bracket(U, V, chart)
        for i in range(conn.q):
            t = (vf_apply(U, om_v[i], chart) - vf_apply(V, om_u[i], chart)
                 + sum(th_u[i, j] * om_v[j] - th_v[i, j] * om_u[j] for j in range(conn.q))
                 - omega[i].on_vectors(br))
            comps.append((f"T^{i + 1}({nu},{nv})", normalize(t)))
    report = Report()
    _field_report(report, "torsion-free", comps, chart, samples, rng)
    return report


def torsion_form(conn: Connection) -> list[DiffForm]:
    """d omega + theta ^ omega (independent exterior route)."""
    omega = conn.coframe()
    return [omega[i].d() + _sum_forms([conn.theta[i, j].wedge(omega[j]) for j in range(conn.q)], conn.chart, 2)
            for i in range(conn.q)]


def is_bott(conn: Connection, samples: int = 25, rng: random.Random | None = None,
            lifts: sp.Matrix | None = None) -> Report:
    """(i) theta^i_j(X) = omega^i([X, N_j]) for leafwise X; (ii) R(X_a, X_b) = 0."""
    rng = rng if rng is not None else random.Random(0)
    report = Report()
    X, N = _frames(conn, rng, lifts)
    if not X:
        report.check("bott-defining", Status.PASS_EXACT, "no leafwise directions")
        report.check("bott-curvature", Status.PASS_EXACT, "no leafwise directions")
        return report
    chart = conn.chart
    omega = conn.coframe()
    comps = []
    for a, Xa in enumerate(X):
        th = conn.theta.on_vectors(Xa)
        for j, Nj in enumerate(N):
            br = vf_bracket(Xa, Nj, chart)
            for i in range(conn.q):
                comps.append((f"(X{a + 1},N{j + 1})^{i + 1}", normalize(th[i, j] - omega[i].on_vectors(br))))
    _field_report(report, "bott-defining", comps, chart, samples, rng)
    R = curvature(conn)
    comps = []
    for (a, Xa), (b, Xb) in itertools.combinations(enumerate(X), 2):
        val = R.on_vectors(Xa, Xb)
        comps += [(f"R(X{a + 1},X{b + 1})[{i + 1},{j + 1}]", val[i, j]) for i in range(conn.q) for j in range(conn.q)]
    if comps:
        _field_report(report, "bott-curvature", comps, chart, samples, rng)
    else:
        report.check("bott-curvature", Status.PASS_EXACT, "leaves are 1-dimensional")
    return report


# ---------------------------------------------------------------- metric connection

def orthonormalizer(eps: sp.Matrix, names: Sequence[str] = (), rng: random.Random | None = None) -> sp.Matrix:
    """Upper-triangular A with positive diagonal and A^T eps A = I (symbolic Gram-Schmidt)."""
    q = eps.rows
    eps = normalize_matrix(eps)
    # Cholesky eps = L L^T, then A = L^{-T}
    L = sp.zeros(q, q)
    for j in range(q):
        pivot = normalize(eps[j, j] - sum(L[j, k] ** 2 for k in range(j)))
        if zero_test(pivot, rng=rng, names=names).status is not ZeroStatus.PROVEN_NONZERO:
            raise OrthonormalizationAmbiguousError(f"Gram-Schmidt pivot {pivot} is not provably nonzero")
        L[j, j] = normalize(sp.sqrt(pivot))
        for i in range(j + 1, q):
            L[i, j] = normalize((eps[i, j] - sum(L[i, k] * L[j, k] for k in range(j))) / L[j, j])
    return normalize_matrix(inverse(L.T))


def euclid_in_frame(conn: Connection, eps_h: sp.Matrix) -> sp.Matrix:
    return normalize_matrix(conn.frame.T * eps_h * conn.frame)


def orthonormal_gauge(conn: Connection, eps_h: sp.Matrix, rng: random.Random | None = None) -> Connection:
    """The same connection expressed in the eps-orthonormal frame obtained by Gram-Schmidt."""
    A = orthonormalizer(euclid_in_frame(conn, eps_h), conn.chart.coords, rng)
    if A == sp.eye(conn.q):
        return conn
    return gauge(conn, A)


def metric_connection(conn: Connection, eps_h: sp.Matrix, rng: random.Random | None = None) -> Connection:
    """Antisymmetric part of the connection form in the eps-orthonormal frame."""
    onb = orthonormal_gauge(conn, eps_h, rng)
    th = onb.theta
    anti = (th - th.transpose()).scale(sp.Rational(1, 2))
    return Connection(onb.chart, onb.fmap, anti, onb.frame)


# ---------------------------------------------------------------- exponential 2-jet

def _poly_jet(polys: Sequence[sp.Expr], s: Sequence[sp.Symbol], q: int, value=None) -> JetMap:
    # Taylor coefficients at s = 0; the inputs are at most quadratic in s
    origin = {v: 0 for v in s}
    coeffs = []
    for p in polys:
        d = {}
        for alpha in multi_indices_upto(q, 2):
            c = p
            for v, e in zip(s, alpha):
                if e:
                    c = sp.diff(c, v, e)
            d[alpha] = c.subs(origin) / factorial(alpha)
        coeffs.append(d)
    return JetMap((ZERO,) * q, tuple(value) if value is not None else (ZERO,) * q, 2, tuple(coeffs))


def section_symbols(q: int) -> list[sp.Symbol]:
    return [sp.Symbol(f"_s{i + 1}") for i in range(q)]


def exp_section_2jet(conn: Connection, frame: sp.Matrix | None = None, aux: MatrixForm | None = None,
                     lifts: sp.Matrix | None = None, point: Mapping | None = None,
                     check: bool = True, rng: random.Random | None = None) -> JetMap:
    """Transverse 2-jet of s -> f(exp(sum_j s^j U_j)) for the frame ``conn.frame · frame``.

    The geodesics are those of the connection on TM built from the frame
    [normal lifts | leafwise kernel fields] with block-diagonal connection form
    (the normal connection and the auxiliary leafwise ``aux``, flat by default).
    The result is the recentred G^2_q jet field (or its value at ``point``).
    """
    if check:
        rep = torsion(conn, rng=rng, lifts=lifts)
        rep.extend(is_bott(conn, rng=rng, lifts=lifts))
        if not rep.all_passed:
            raise PreconditionError("exponential section needs a torsion-free Bott connection")
    c = conn if frame is None else gauge(conn, frame)
    chart, q, n = c.chart, c.q, c.chart.dim
    X, N = _frames(c, rng, lifts)
    F = sp.Matrix(n, n, lambda a, b: N[b][a] if b < q else X[b - q][a])
    F = normalize_matrix(F)
    Finv = inverse(F)
    blocks = [[c.theta[i, j] if i < q and j < q else
               (aux[i - q, j - q] if aux is not None and i >= q and j >= q else DiffForm.zero(chart, 1))
               for j in range(n)] for i in range(n)]
    Theta = MatrixForm(blocks)
    dF = MatrixForm([[DiffForm.scalar(chart, F[i, j]).d() for j in range(n)] for i in range(n)])
    Omega = (Theta.right_mul(Finv).left_mul(F) - dF.right_mul(Finv))
    # Gamma^D_{AC} = Omega^D_C(d_A)
    Gam = [[[Omega[D, C].coefficient((A,)) for C in range(n)] for A in range(n)] for D in range(n)]
    s = section_symbols(q)
    v = [sum(N[j][a] * s[j] for j in range(q)) for a in range(n)]
    syms = chart.symbols
    polys = []
    for i, f in enumerate(c.fmap):
        lin = sum(sp.diff(f, syms[a]) * v[a] for a in range(n))
        hess = sum(sp.diff(f, syms[a], syms[b]) * v[a] * v[b] for a in range(n) for b in range(n))
        gvv = [sum(Gam[D][A][C] * v[A] * v[C] for A in range(n) for C in range(n)) for D in range(n)]
        corr = sum(sp.diff(f, syms[D]) * gvv[D] for D in range(n))
        polys.append(lin + (hess - corr) / 2)
    jet = _poly_jet(polys, s, q)
    return jet.substitute(point) if point is not None else jet


def exp_section_closed_form(conn: Connection, frame: sp.Matrix | None = None,
                            lifts: sp.Matrix | None = None) -> JetMap:
    """Oracle: linear part P (frame in Haefliger coordinates), quadratic part -1/2 Gamma(Ps, Ps)."""
    c = conn if frame is None else gauge(conn, frame)
    P = c.frame
    Gam = haefliger_christoffel(c, lifts)
    q = c.q
    s = section_symbols(q)
    Ps = [sum(P[j, k] * s[k] for k in range(q)) for j in range(q)]
    polys = [sum(P[i, k] * s[k] for k in range(q))
             - sp.Rational(1, 2) * sum(Gam[i][j][k] * Ps[j] * Ps[k] for j in range(q) for k in range(q))
             for i in range(q)]
    return _poly_jet(polys, s, q)


def quadratic_tensor(jet: JetMap) -> list[sp.Matrix]:
    """Symmetric matrices Q^i with Q^i(s) = s^T Q^i s from the monomial coefficients."""
    q = jet.source_dim
    out = []
    for i in range(jet.target_dim):
        M = sp.zeros(q, q)
        for a, cval in jet.coeffs[i].items():
            if sum(a) != 2:
                continue
            idx = [k for k in range(q) for _ in range(a[k])]
            if idx[0] == idx[1]:
                M[idx[0], idx[0]] = cval
            else:
                M[idx[0], idx[1]] = M[idx[1], idx[0]] = cval / 2
        out.append(M)
    return out


def tautological_connection(jet: JetMap, chart: Chart, fmap: Sequence) -> tuple[list[DiffForm], MatrixForm]:
    """Solder form L^{-1} df and gl-part L^{-1} dL - 2 L^{-1} Q(L^{-1} df, .) of a 2-jet section."""
    L = jet.linear_part()
    Linv = inverse(L)
    q = L.rows
    dfs = [DiffForm.scalar(chart, f).d() for f in fmap]
    omega = [_lincomb([Linv[i, k] for k in range(q)], dfs, chart) for i in range(q)]
    Q = quadratic_tensor(jet)
    rows = []
    for i in range(q):
        row = []
        for j in range(q):
            terms = [DiffForm.scalar(chart, L[m, j]).d().scale(Linv[i, m]) for m in range(q)]
            for m in range(q):
                for a in range(q):
                    coef = normalize(-2 * Linv[i, m] * Q[m][a, j])
                    if coef != 0:
                        terms.append(omega[a].scale(coef))
            acc = DiffForm.zero(chart, 1)
            for t in terms:
                acc = acc + t
            row.append(acc)
        rows.append(row)
    return omega, MatrixForm(rows)


# ---------------------------------------------------------------- adapted geometries

def singular_points(fchart: FoliatedChart, minors: Sequence[sp.Expr], grid: int = 5) -> list[dict]:
    """Common zeros of the minors: exact solutions when sympy finds them, else grid points."""
    syms = list(fchart.chart.symbols)
    pts: list[dict] = []
    nonconst = [m for m in minors if m != 0]
    if not nonconst:
        return [dict(zip(fchart.coords, p)) for p in itertools.product(
            [Fraction(k, 2) for k in range(-2, 3)], repeat=len(syms))][:grid ** 2]
    if any(m.is_number for m in nonconst):
        return []
    try:
        sols = sp.solve(nonconst, syms, dict=True)
    except (NotImplementedError, ValueError, TypeError):
        sols = None
    if sols is not None:
        for sol in sols:
            free = [s for s in syms if s not in sol]
            for vals in itertools.product([0, 1, -1], repeat=len(free)) if free else [()]:
                binding = dict(zip(free, vals))
                pt = {}
                ok = True
                for s in syms:
                    v = sp.sympify(sol.get(s, s)).subs(binding)
                    if not v.is_real or not v.is_number:
                        ok = False
                        break
                    pt[s.name] = Fraction(str(v)) if v.is_Rational else float(v)
                if ok and fchart.contains(pt) and pt not in pts:
                    pts.append(pt)
        return pts
    from .foliation import grid_points, _is_zero_at
    for p in grid_points(len(syms), grid):
        pt = dict(zip(fchart.coords, p))
        if fchart.contains(pt) and all(_is_zero_at(m, pt) for m in nonconst):
            pts.append(pt)
    return pts


def _section_coordinates(conn: Connection, eps_h: sp.Matrix, lifts: sp.Matrix | None,
                         rng: random.Random | None = None) -> dict[str, sp.Expr]:
    """q = 1: coordinates of the exponential 2-jet through the eps-orthonormal frame.

    Gram-Schmidt already picks the positive representative, so the polar slice
    is the jet itself: S = L, and Q is invariant under s -> -s.
    """
    onb = orthonormal_gauge(conn, eps_h, rng)
    jet = exp_section_2jet(onb, lifts=lifts, check=False, rng=rng)
    return {"S": normalize(jet.coefficient(0, (1,))), "Q": normalize(jet.coefficient(0, (2,)))}


def _ray_limits(e_fn, point: Mapping, names: Sequence[str], directions, ts) -> tuple[bool, list[float], str]:
    """Extrapolated limits of ``e_fn`` along rays; Cauchy test on successive extrapolations."""
    limits = []
    for dvec in directions:
        vals = []
        for t in ts:
            pt = {k: float(point[k]) + t * dk for k, dk in zip(names, dvec)}
            try:
                vals.append(e_fn(pt))
            except (EvaluationDomainError, ZeroDivisionError, ValueError, OverflowError):
                return False, limits, f"evaluation fails at distance {t:g}"
        # Richardson extrapolation for the ratio-10 sequence
        ext = [(10 * b - a) / 9 for a, b in zip(vals, vals[1:])]
        scale = max(1.0, abs(ext[-1]))
        if abs(ext[-1] - ext[-2]) > 1e-6 * scale or not all(math.isfinite(v) for v in vals):
            return False, limits, f"no limit along ray {tuple(round(x, 4) for x in dvec)}"
        limits.append(ext[-1])
    spread = max(limits) - min(limits)
    if spread > 1e-6 * max(1.0, max(abs(x) for x in limits)):
        return False, limits, f"ray limits disagree (spread {spread:.3g})"
    return True, limits, "limits agree"


def _rays(n: int, count: int, rng: random.Random) -> list[list[float]]:
    out = []
    for _ in range(count):
        v = [rng.gauss(0, 1) for _ in range(n)]
        norm = math.sqrt(sum(x * x for x in v)) or 1.0
        out.append([x / norm for x in v])
    return out


RAY_DISTANCES = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6)


def _singular_at(kind: str, node: sp.Expr, point: Mapping) -> bool:
    """A node is harmless at ``point`` when it is finite there and nonzero (positive for radicands and logs)."""
    v = substitute(node, {k: sp.nsimplify(x) if isinstance(x, float) else x for k, x in point.items()})
    if v.has(sp.zoo, sp.nan, sp.oo, -sp.oo):
        return True
    if not v.is_number:
        return True
    try:
        c = complex(v.evalf())
    except (TypeError, ValueError):
        return True
    if abs(c) < 1e-12 or not math.isfinite(abs(c)):
        return True
    return kind != "denominator" and (abs(c.imag) > 1e-12 or c.real <= 0)


def smooth_extension_status(exprs: Mapping[str, sp.Expr], chart: Chart, points: Sequence[Mapping],
                            rng: random.Random, rays: int = 5, derivatives: bool = True) -> tuple[Status, str, dict | None]:
    """Exact when every singular node is nonzero at every point; else numeric ray test (value and first derivatives)."""
    if not points:
        return Status.PASS_EXACT, "no singular points", None
    suspicious = []
    for name, e in exprs.items():
        for kind, node in singular_subterms(e):
            for p in points:
                if _singular_at(kind, node, p):
                    suspicious.append((name, e, p))
    if not suspicious:
        return Status.PASS_EXACT, "all denominators, radicands and log arguments nonzero on the singular set", None
    directions = _rays(chart.dim, rays, rng)
    for name, e, p in suspicious:
        targets = [(name, e)]
        if derivatives:
            targets += [(f"d{name}/d{c}", normalize(sp.diff(e, s))) for c, s in zip(chart.coords, chart.symbols)]
        for tname, te in targets:
            ok, limits, why = _ray_limits(lambda pt, te=te: evaluate(te, pt), p, chart.coords, directions, RAY_DISTANCES)
            if not ok:
                return Status.FAIL, f"{tname} does not extend smoothly at {format_point(p)}: {why}", dict(p)
    return Status.PASS_NUMERIC, "ray limits converge and agree (tol 1e-6) at the singular set", None


def adapted_check(atlas: Atlas, geometries: Mapping[str, tuple[Connection, sp.Matrix]],
                  rng: random.Random | None = None, rays: int = 5, grid: int = 5,
                  lifts: Mapping[str, sp.Matrix] | None = None) -> Report:
    """Does the exponential 2-jet section, reduced mod O(q), extend smoothly across the singular set?"""
    rng = rng if rng is not None else random.Random(0)
    report = Report()
    locus = singular_locus(atlas)
    for fc in atlas.charts:
        conn, eps_h = geometries[fc.name]
        pts = singular_points(fc, locus.chart_minors(fc.name), grid)
        name = f"adapted[{fc.name}]"
        if not pts:
            report.check(name, Status.PASS_EXACT, "no singular points in the chart")
            continue
        lift = lifts.get(fc.name) if lifts else None
        if conn.q == 1:
            coords = _section_coordinates(conn, eps_h, lift, rng)
            status, detail, witness = smooth_extension_status(coords, fc.chart, pts, rng, rays)
        else:
            status, detail, witness = _numeric_polar_check(conn, eps_h, fc.chart, pts, rng, rays, lift)
        report.check(name, status, detail, witness)
    return report


def _numeric_polar_check(conn: Connection, eps_h: sp.Matrix, chart: Chart, points, rng, rays, lifts):
    """q >= 2: polar factor eps^{-1/2} and -1/2 Gamma(S., S.) evaluated numerically along rays."""
    Gam = haefliger_christoffel(conn, lifts)
    q = conn.q

    def coords_at(pt):
        E = np.array([[evaluate(eps_h[i, j], pt) for j in range(q)] for i in range(q)])
        w, V = np.linalg.eigh(E)
        if min(w) <= 0:
            raise EvaluationDomainError("eps not positive")
        S = V @ np.diag(w ** -0.5) @ V.T
        G = np.array([[[evaluate(Gam[i][j][k], pt) for k in range(q)] for j in range(q)] for i in range(q)])
        Q = -0.5 * np.einsum("ijk,ja,kb->iab", G, S, S)
        return np.concatenate([S.ravel(), Q.ravel()])

    directions = _rays(chart.dim, rays, rng)
    size = q * q + q ** 3
    for p in points:
        for idx in range(size):
            ok, _, why = _ray_limits(lambda pt, idx=idx: float(coords_at(pt)[idx]), p, chart.coords,
                                     directions, RAY_DISTANCES)
            if not ok:
                return Status.FAIL, f"section coordinate {idx} does not extend at {format_point(p)}: {why}", dict(p)
    return Status.PASS_NUMERIC, "numeric polar section converges along rays (tol 1e-6)", None


# ---------------------------------------------------------------- pullbacks

def pullback_geometry(phi: Sequence, source: Chart, conn: Connection, eps_h: sp.Matrix) -> tuple[Connection, sp.Matrix]:
    """(phi^* eps, phi^* nabla): entrywise pullback of theta, frame and eps; chart map f∘phi."""
    phi = [as_expr(p) for p in phi]
    binding = dict(zip(conn.chart.coords, phi))
    fmap = tuple(substitute(f, binding) for f in conn.fmap)
    theta = conn.theta.pullback(phi, source)
    frame = conn.frame.applyfunc(lambda e: substitute(e, binding))
    eps = eps_h.applyfunc(lambda e: substitute(e, binding))
    return Connection(source, fmap, theta, frame), eps
