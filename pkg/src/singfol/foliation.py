"""Chart atlases carrying Haefliger cocycles.

Each chart has coordinates, a domain (strict inequalities ``expr > 0``) and a
map to R^q. A transition (a, b) carries ``h_ab`` in formal variables and,
when the two charts use different coordinates, the coordinate change from
b-coordinates to a-coordinates; charts sharing coordinates need none.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Mapping, Sequence

import sympy as sp

from .errors import PreconditionError
from .exterior import Chart, DiffForm, vf_bracket
from .expr import (ZERO, ZeroStatus, as_expr, differentiate, evaluate, find_witness, normalize,
                   substitute, zero_test)
from .jets import JetMap, jets_equal, transition_2jet
from .report import Report, Status, format_point, status_from_zero, zero_detail
from .errors import EvaluationDomainError


@dataclass(frozen=True)
class FoliatedChart:
    chart: Chart
    fmap: tuple[sp.Expr, ...]
    domain: tuple[sp.Expr, ...] = ()

    @property
    def name(self) -> str:
        return self.chart.name

    @property
    def coords(self) -> tuple[str, ...]:
        return self.chart.coords

    def jacobian(self) -> sp.Matrix:
        return sp.Matrix([[differentiate(f, c) for c in self.coords] for f in self.fmap])

    def contains(self, point: Mapping) -> bool:
        try:
            return all(evaluate(c, point) > 0 for c in self.domain)
        except EvaluationDomainError:
            return False


@dataclass(frozen=True)
class Transition:
    source: str  # b: the chart whose values are fed in
    target: str  # a
    variables: tuple[str, ...]
    hmap: tuple[sp.Expr, ...]
    domain: tuple[sp.Expr, ...] = ()  # constraints in ``variables``
    coord_map: tuple[sp.Expr, ...] | None = None  # b-coordinates -> a-coordinates

    def apply(self, values: Sequence) -> list[sp.Expr]:
        binding = dict(zip(self.variables, values))
        return [substitute(h, binding) for h in self.hmap]


@dataclass(frozen=True)
class Atlas:
    n: int
    q: int
    charts: tuple[FoliatedChart, ...]
    transitions: Mapping[tuple[str, str], Transition] = field(default_factory=dict)
    name: str = "M"

    def __post_init__(self):
        for c in self.charts:
            if c.chart.dim != self.n:
                raise ValueError(f"chart {c.name} has dimension {c.chart.dim}, expected {self.n}")
            if len(c.fmap) != self.q:
                raise ValueError(f"chart {c.name} map has {len(c.fmap)} components, expected {self.q}")
        if self.q > self.n:
            raise ValueError("codimension exceeds dimension")

    def chart(self, name: str) -> FoliatedChart:
        for c in self.charts:
            if c.name == name:
                return c
        raise KeyError(name)

    @classmethod
    def single(cls, coords: Sequence[str], fmap: Sequence, domain: Sequence = (), name: str = "U") -> "Atlas":
        chart = FoliatedChart(Chart(name, tuple(coords)), tuple(as_expr(f) for f in fmap),
                              tuple(as_expr(d) for d in domain))
        return cls(len(coords), len(fmap), (chart,), {})

    def coordinate_change(self, a: str, b: str) -> list[sp.Expr]:
        """Expressions of a-coordinates in terms of b-coordinates."""
        if a == b:
            return list(self.chart(a).chart.symbols)
        t = self.transitions.get((a, b))
        if t is not None and t.coord_map is not None:
            return list(t.coord_map)
        ca, cb = self.chart(a), self.chart(b)
        if ca.coords == cb.coords:
            return list(cb.chart.symbols)
        raise PreconditionError(f"no coordinate change from chart {b} to chart {a}")

    def overlap_domain(self, a: str, b: str) -> list[sp.Expr]:
        """Constraints (in b-coordinates) describing the overlap of a and b."""
        ca, cb = self.chart(a), self.chart(b)
        psi = dict(zip(ca.coords, self.coordinate_change(a, b)))
        out = list(cb.domain) + [substitute(d, psi) for d in ca.domain]
        t = self.transitions.get((a, b))
        if t is not None:
            vals = dict(zip(t.variables, cb.fmap))
            out += [substitute(d, vals) for d in t.domain]
        return out


# ---------------------------------------------------------------- cocycle

def _residual_entry(report: Report, name: str, residual, names, domain, samples, rng):
    z = zero_test(residual, samples=samples, rng=rng, domain=domain, names=names)
    status = status_from_zero(z)
    witness = None
    if status is Status.FAIL:
        witness = find_witness(residual, names, domain, rng) or z.witness
    detail = zero_detail(z)
    if witness:
        detail += f" at {format_point(witness)}"
    report.check(name, status, detail, witness)


def verify_cocycle(atlas: Atlas, samples: int = 25, rng: random.Random | None = None) -> Report:
    """Compatibility f_a = h_ab∘f_b on every overlap and h_ab∘h_bc = h_ac on triples."""
    rng = rng if rng is not None else random.Random(0)
    report = Report()
    if not atlas.transitions:
        report.check("cocycle", Status.PASS_EXACT, f"{len(atlas.charts)} chart(s), no overlaps declared")
        return report
    for (a, b), t in sorted(atlas.transitions.items()):
        ca, cb = atlas.chart(a), atlas.chart(b)
        psi = dict(zip(ca.coords, atlas.coordinate_change(a, b)))
        h_of_fb = t.apply(cb.fmap)
        domain = atlas.overlap_domain(a, b)
        for i, (fa, hf) in enumerate(zip(ca.fmap, h_of_fb)):
            residual = normalize(substitute(fa, psi) - hf)
            _residual_entry(report, f"compat[{a},{b}][{i + 1}]", residual, cb.coords, domain, samples, rng)
        if a == b:
            for i, (h, v) in enumerate(zip(t.hmap, t.variables)):
                _residual_entry(report, f"identity[{a}][{i + 1}]", normalize(h - sp.Symbol(v)),
                                t.variables, t.domain, samples, rng)
    for (a, b), t_ab in sorted(atlas.transitions.items()):
        for (b2, c), t_bc in sorted(atlas.transitions.items()):
            if b2 != b or (a, c) not in atlas.transitions or len({a, b, c}) < 2:
                continue
            t_ac = atlas.transitions[(a, c)]
            comp = t_ab.apply([substitute(h, dict(zip(t_bc.variables, t_ac.variables))) for h in t_bc.hmap])
            bc_domain = [substitute(d, dict(zip(t_bc.variables, t_ac.variables))) for d in t_bc.domain]
            for i, (x, y) in enumerate(zip(comp, t_ac.hmap)):
                _residual_entry(report, f"triple[{a},{b},{c}][{i + 1}]", normalize(x - y), t_ac.variables,
                                list(t_ac.domain) + bc_domain, samples, rng)
    return report


def transition_jet(atlas: Atlas, a: str, b: str, point: Mapping, order: int = 2) -> JetMap:
    """G^k_q-valued transition jet of (a, b) at a point given in b-coordinates."""
    cb = atlas.chart(b)
    if (a, b) not in atlas.transitions:
        if a == b:
            return JetMap.identity(atlas.q, order)
        raise PreconditionError(f"no transition ({a},{b})")
    if not all(evaluate(c, point) > 0 for c in atlas.overlap_domain(a, b)):
        raise PreconditionError(f"point {format_point(point)} is outside the overlap of {a} and {b}")
    t = atlas.transitions[(a, b)]
    at = [substitute(f, point) for f in cb.fmap]
    return transition_2jet(t.hmap, t.variables, at, order)


def jet_cocycle_check(atlas: Atlas, a: str, b: str, c: str, point: Mapping) -> bool:
    """j(h_ab)∘j(h_bc) = j(h_ac) at a point given in c-coordinates."""
    from .jets import compose_jets
    psi_bc = dict(zip(atlas.chart(b).coords, [substitute(e, point) for e in atlas.coordinate_change(b, c)]))
    j_ab = transition_jet(atlas, a, b, psi_bc)
    j_bc = transition_jet(atlas, b, c, point)
    j_ac = transition_jet(atlas, a, c, point)
    return jets_equal(compose_jets(j_ab, j_bc), j_ac)


# ---------------------------------------------------------------- singular set

@dataclass(frozen=True)
class SingularLocus:
    minors: Mapping[str, tuple[sp.Expr, ...]]  # chart name -> all q x q minors of the Jacobian
    columns: Mapping[str, tuple[tuple[int, ...], ...]]

    def chart_minors(self, name: str) -> tuple[sp.Expr, ...]:
        return self.minors[name]


def jacobian_minors(jac: sp.Matrix) -> tuple[list[tuple[int, ...]], list[sp.Expr]]:
    q, n = jac.shape
    cols = list(itertools.combinations(range(n), q))
    return cols, [normalize(jac[:, list(c)].det(method="berkowitz")) for c in cols]


def singular_locus(atlas: Atlas) -> SingularLocus:
    minors, columns = {}, {}
    for c in atlas.charts:
        cols, ms = jacobian_minors(c.jacobian())
        minors[c.name], columns[c.name] = tuple(ms), tuple(cols)
    return SingularLocus(minors, columns)


def _is_zero_at(e: sp.Expr, point: Mapping) -> bool:
    """Exact value test of ``e`` at a rational point (numeric fallback 1e-12)."""
    v = substitute(e, point)
    if v == 0:
        return True
    if v.is_Rational:
        return False
    try:
        return abs(evaluate(v, {})) < 1e-12
    except EvaluationDomainError:
        return False


def is_regular_at(chart: FoliatedChart, point: Mapping, minors: Sequence[sp.Expr] | None = None) -> bool:
    if minors is None:
        _, minors = jacobian_minors(chart.jacobian())
    return any(not _is_zero_at(m, point) for m in minors)


def grid_points(n: int, resolution: int) -> list[tuple[Fraction, ...]]:
    """Rational grid on [-1, 1]^n; odd resolutions contain the origin."""
    axis = [Fraction(2 * k, resolution - 1) - 1 for k in range(resolution)] if resolution > 1 else [Fraction(0)]
    return list(itertools.product(axis, repeat=n))


def density_check(atlas: Atlas, resolution: int = 11, threshold: float = 0.99) -> Report:
    report = Report()
    locus = singular_locus(atlas)
    candidate = True
    for c in atlas.charts:
        fns = [sp.lambdify(c.chart.symbols, m, modules="math") for m in locus.minors[c.name]]
        grid = grid_points(atlas.n, resolution)
        state: dict[tuple[Fraction, ...], bool] = {}
        for p in grid:
            pt = dict(zip(c.coords, p))
            if not c.contains(pt):
                continue
            regular = False
            for f in fns:
                try:
                    if abs(f(*map(float, p))) > 1e-12:
                        regular = True
                        break
                except (ValueError, ZeroDivisionError, OverflowError):
                    continue
            state[p] = regular
        if not state:
            report.check(f"density[{c.name}]", Status.UNDECIDED, "no grid point inside the chart domain")
            candidate = False
            continue
        step = Fraction(2, resolution - 1) if resolution > 1 else Fraction(1)
        frac = sum(state.values()) / len(state)
        isolated = []
        for p, reg in state.items():
            if reg:
                continue
            nbrs = [tuple(p[:i] + (p[i] + s,) + p[i + 1:]) for i in range(len(p)) for s in (step, -step)]
            if not any(state.get(nb, False) for nb in nbrs):
                isolated.append(p)
        ok = frac >= threshold and not isolated
        candidate &= ok
        detail = f"regular fraction {frac:.6f} on {len(state)} grid points (resolution {resolution})"
        if isolated:
            detail += f"; {len(isolated)} singular point(s) without regular neighbours"
        witness = None
        if not ok:
            bad = next((p for p, r in state.items() if not r), None)
            witness = dict(zip(c.coords, bad)) if bad is not None else None
        report.check(f"density[{c.name}]", Status.PASS_NUMERIC if ok else Status.FAIL, detail, witness)
    report.check("haefliger-singular-candidate", Status.PASS_NUMERIC if candidate else Status.FAIL,
                 "regular set dense at grid resolution" if candidate else "regular set not dense at grid resolution")
    return report


# ---------------------------------------------------------------- pullbacks and regularity

def pullback_foliation(atlas: Atlas, phi: Sequence, source: Chart) -> Atlas:
    """Charts phi^{-1}(U_a) with maps f_a∘phi; transitions unchanged."""
    phi = [as_expr(p) for p in phi]
    if len(phi) != atlas.n:
        raise ValueError(f"map has {len(phi)} components, target dimension is {atlas.n}")
    charts = []
    for c in atlas.charts:
        binding = dict(zip(c.coords, phi))
        charts.append(FoliatedChart(Chart(c.name, source.coords),
                                    tuple(substitute(f, binding) for f in c.fmap),
                                    tuple(substitute(d, binding) for d in c.domain)))
    transitions = {k: replace(t, coord_map=None) for k, t in atlas.transitions.items()}
    return Atlas(source.dim, atlas.q, tuple(charts), transitions, atlas.name + "*")


def map_regularity(atlas: Atlas, phi: Sequence, source: Chart, point: Mapping) -> str:
    """``"regular"`` iff the composite f_a∘phi has rank q at the point."""
    phi = [as_expr(p) for p in phi]
    image = {c: substitute(p, point) for c, p in zip(atlas.charts[0].coords, phi)}
    for c in atlas.charts:
        img = {k: substitute(p, point) for k, p in zip(c.coords, phi)}
        if not c.contains(img):
            continue
        binding = dict(zip(c.coords, phi))
        comp = [substitute(f, binding) for f in c.fmap]
        jac = sp.Matrix([[differentiate(f, u) for u in source.coords] for f in comp])
        _, minors = jacobian_minors(jac)
        return "regular" if any(not _is_zero_at(m, point) for m in minors) else "singular"
    raise PreconditionError(f"image {format_point(image)} lies outside every chart domain")


def graph_foliation(atlas: Atlas, fiber_names: Sequence[str] | None = None) -> tuple[Atlas, dict[str, list[sp.Expr]]]:
    """Regular foliation of M x R^q by the projection to R^q, with embeddings x -> (x, f_a(x))."""
    taken = {c for ch in atlas.charts for c in ch.coords}
    if fiber_names is None:
        fiber_names = []
        k = 1
        while len(fiber_names) < atlas.q:
            name = f"s{k}"
            if name not in taken:
                fiber_names.append(name)
            k += 1
    charts, embeddings = [], {}
    for c in atlas.charts:
        coords = c.coords + tuple(fiber_names)
        charts.append(FoliatedChart(Chart(c.name, coords), tuple(sp.Symbol(s) for s in fiber_names), c.domain))
        embeddings[c.name] = list(c.chart.symbols) + list(c.fmap)
    transitions = {}
    for (a, b), t in atlas.transitions.items():
        base = atlas.coordinate_change(a, b)
        fiber = [substitute(h, dict(zip(t.variables, [sp.Symbol(s) for s in fiber_names]))) for h in t.hmap]
        transitions[(a, b)] = Transition(b, a, t.variables, t.hmap, t.domain, tuple(base) + tuple(fiber))
    return Atlas(atlas.n + atlas.q, atlas.q, tuple(charts), transitions, f"G({atlas.name})"), embeddings


# ---------------------------------------------------------------- involutivity

def choose_pivots(W: sp.Matrix, point: Mapping | None = None, rng: random.Random | None = None):
    """Pivot columns whose q x q minor is nonzero (at ``point`` if given, else generically)."""
    q, n = W.shape
    for cols in itertools.combinations(range(n), q):
        D = normalize(W[:, list(cols)].det(method="berkowitz"))
        if point is not None:
            if not _is_zero_at(D, point):
                return cols, D
        elif zero_test(D, rng=rng).status is ZeroStatus.PROVEN_NONZERO:
            return cols, D
    return None, None


def kernel_fields(W: sp.Matrix, pivots: Sequence[int]) -> list[list[sp.Expr]]:
    """Division-free basis of ker W: X_m = D d_m - sum_p (adj(W_P) W_m)_p d_p for non-pivot m."""
    q, n = W.shape
    WP = W[:, list(pivots)]
    D = normalize(WP.det(method="berkowitz")) if q else sp.Integer(1)
    adj = WP.adjugate(method="berkowitz") if q > 1 else (sp.Matrix([[1]]) if q == 1 else sp.zeros(0, 0))
    fields = []
    for m in range(n):
        if m in pivots:
            continue
        X = [ZERO] * n
        X[m] = D
        if q:
            corr = adj * W[:, m]
            for r, p in enumerate(pivots):
                X[p] = normalize(-corr[r])
        fields.append([normalize(x) for x in X])
    return fields


def involutivity_check(atlas: Atlas, points: Sequence[Mapping], forms: Mapping[str, Sequence[DiffForm]] | None = None,
                       samples: int = 25, rng: random.Random | None = None) -> Report:
    """Check that the kernel distribution of the defining 1-forms is closed under brackets.

    ``forms`` replaces the differentials of the chart maps by raw 1-forms (per chart name).
    Both ω([X,Y]) and -dω(X,Y) are computed; they must agree since ω vanishes on X and Y.
    """
    rng = rng if rng is not None else random.Random(0)
    report = Report()
    for c in atlas.charts:
        if forms is not None and c.name in forms:
            omegas = list(forms[c.name])
        else:
            omegas = [DiffForm.scalar(c.chart, f).d() for f in c.fmap]
        W = sp.Matrix([[w.coefficient((j,)) for j in range(c.chart.dim)] for w in omegas])
        pts = [p for p in points if c.contains(p)] if c.domain else list(points)
        for p in pts:
            tag = f"involutive[{c.name}]@{format_point(p)}"
            pivots, D = choose_pivots(W, p)
            if pivots is None:
                raise PreconditionError(f"point {format_point(p)} is singular in chart {c.name}")
            fields = kernel_fields(W, pivots)
            statuses, witness, values = [], None, []
            for X, Y in itertools.combinations(fields, 2):
                br = vf_bracket(X, Y, c.chart)
                for w in omegas:
                    direct = w.on_vectors(br)
                    via_d = normalize(-w.d().on_vectors(X, Y))
                    if normalize(direct - via_d) != 0:
                        z = zero_test(direct - via_d, samples=samples, rng=rng, names=c.coords, domain=c.domain)
                        if z.status is ZeroStatus.PROVEN_NONZERO:
                            raise AssertionError("bracket identity violated; internal inconsistency")
                    symbolic = zero_test(direct, samples=samples, rng=rng, names=c.coords, domain=c.domain)
                    at_p = _is_zero_at(direct, p)
                    values.append(direct)
                    if symbolic.status is ZeroStatus.PROVEN_ZERO:
                        statuses.append(Status.PASS_EXACT)
                    elif not at_p:
                        statuses.append(Status.FAIL)
                        witness = dict(p)
                    else:
                        statuses.append(Status.PASS_NUMERIC)
            from .report import combine
            status = combine(statuses) if statuses else Status.PASS_EXACT
            detail = f"{len(fields)} kernel field(s), {len(statuses)} bracket component(s)"
            if status is Status.FAIL:
                detail += "; bracket leaves the kernel"
            report.check(tag, status, detail, witness)
    return report
