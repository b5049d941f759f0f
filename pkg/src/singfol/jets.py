"""Truncated polynomial map germs (k-jets, k <= 3).

A jet stores, per target component, the Taylor coefficients divided by the
multi-index factorial, so that composition is plain substitution of power
series followed by truncation. Coefficients are expressions, which lets one
jet describe a whole jet field over a chart.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import sympy as sp

from .errors import DimensionMismatchError, EvaluationDomainError, JetMismatchError, SingularJetError
from .expr import ZERO, ZeroStatus, as_expr, inverse, is_zero, normalize, substitute

MAX_ORDER = 3

MultiIndex = tuple[int, ...]


def multi_indices(dim: int, total: int) -> list[MultiIndex]:
    """All multi-indices in ``dim`` variables with the given total degree, in lex order descending."""
    out = [a for a in itertools.product(range(total + 1), repeat=dim) if sum(a) == total]
    return sorted(out, reverse=True)


def multi_indices_upto(dim: int, k: int, start: int = 1) -> list[MultiIndex]:
    return [a for d in range(start, k + 1) for a in multi_indices(dim, d)]


def factorial(alpha: MultiIndex) -> int:
    return math.prod(math.factorial(a) for a in alpha)


def unit(dim: int, i: int) -> MultiIndex:
    return tuple(1 if j == i else 0 for j in range(dim))


# truncated polynomials: dict multi-index -> Expr (unnormalized while building)

def _poly_add(p: dict, q: dict) -> dict:
    out = dict(p)
    for k, v in q.items():
        out[k] = out.get(k, ZERO) + v
    return out


def _poly_mul(p: dict, q: dict, k: int) -> dict:
    out: dict = {}
    for a, ca in p.items():
        for b, cb in q.items():
            m = tuple(x + y for x, y in zip(a, b))
            if sum(m) <= k:
                out[m] = out.get(m, ZERO) + ca * cb
    return out


def _poly_normalize(p: dict) -> dict:
    out = {}
    for a, c in p.items():
        c = normalize(c)
        if c != 0:
            out[a] = c
    return out


def _poly_compose(g_coeffs: Mapping, inner: Sequence[dict], dim: int, k: int) -> dict:
    """Substitute the offset polynomials ``inner`` (no constant terms) into ``g``."""
    powers: dict[tuple[int, int], dict] = {}

    def power(j: int, e: int) -> dict:
        if (j, e) not in powers:
            powers[(j, e)] = {tuple([0] * dim): sp.Integer(1)} if e == 0 else _poly_mul(power(j, e - 1), inner[j], k)
        return powers[(j, e)]

    out: dict = {}
    for beta, c in g_coeffs.items():
        term = {tuple([0] * dim): c}
        for j, e in enumerate(beta):
            if e:
                term = _poly_mul(term, power(j, e), k)
        out = _poly_add(out, term)
    return out


@dataclass(frozen=True)
class JetMap:
    """k-jet at ``base`` of a map R^source_dim -> R^target_dim."""

    base: tuple[sp.Expr, ...]
    value: tuple[sp.Expr, ...]
    order: int
    coeffs: tuple[Mapping[MultiIndex, sp.Expr], ...]

    def __post_init__(self):
        if not 1 <= self.order <= MAX_ORDER:
            raise ValueError(f"jet order {self.order} outside 1..{MAX_ORDER}")
        if len(self.value) != len(self.coeffs):
            raise DimensionMismatchError("value and coefficient lengths differ")
        clean = []
        for comp in self.coeffs:
            d = {}
            for alpha in sorted(comp):
                if len(alpha) != len(self.base) or not 1 <= sum(alpha) <= self.order:
                    raise ValueError(f"bad multi-index {alpha}")
                c = normalize(comp[alpha])
                if c != 0:
                    d[alpha] = c
            clean.append(d)
        object.__setattr__(self, "coeffs", tuple(clean))
        object.__setattr__(self, "base", tuple(normalize(b) for b in self.base))
        object.__setattr__(self, "value", tuple(normalize(v) for v in self.value))

    @property
    def source_dim(self) -> int:
        return len(self.base)

    @property
    def target_dim(self) -> int:
        return len(self.value)

    @classmethod
    def identity(cls, q: int, k: int, base: Sequence | None = None) -> "JetMap":
        base = tuple(as_expr(b) for b in base) if base is not None else (ZERO,) * q
        return cls(base, base, k, tuple({unit(q, i): sp.Integer(1)} for i in range(q)))

    @classmethod
    def linear(cls, matrix, k: int) -> "JetMap":
        m = sp.Matrix(matrix)
        rows, cols = m.shape
        coeffs = tuple({unit(cols, j): m[i, j] for j in range(cols)} for i in range(rows))
        return cls((ZERO,) * cols, (ZERO,) * rows, k, coeffs)

    @classmethod
    def from_parts(cls, linear, quadratic: Sequence[Mapping[MultiIndex, object]] = (), k: int = 2,
                   base: Sequence | None = None, value: Sequence | None = None) -> "JetMap":
        m = sp.Matrix(linear)
        rows, cols = m.shape
        coeffs = []
        for i in range(rows):
            d = {unit(cols, j): m[i, j] for j in range(cols)}
            if i < len(quadratic):
                d.update({a: as_expr(c) for a, c in quadratic[i].items()})
            coeffs.append(d)
        base = tuple(as_expr(b) for b in base) if base is not None else (ZERO,) * cols
        value = tuple(as_expr(v) for v in value) if value is not None else (ZERO,) * rows
        return cls(base, value, k, tuple(coeffs))

    def coefficient(self, i: int, alpha: MultiIndex) -> sp.Expr:
        return self.coeffs[i].get(tuple(alpha), ZERO)

    def linear_part(self) -> sp.Matrix:
        n = self.source_dim
        return sp.Matrix(self.target_dim, n, lambda i, j: self.coefficient(i, unit(n, j)))

    def part(self, degree: int) -> tuple[dict, ...]:
        return tuple({a: c for a, c in comp.items() if sum(a) == degree} for comp in self.coeffs)

    def truncate(self, k: int) -> "JetMap":
        if k > self.order:
            raise ValueError("cannot raise the order of a jet")
        return JetMap(self.base, self.value, k,
                      tuple({a: c for a, c in comp.items() if sum(a) <= k} for comp in self.coeffs))

    def recentred(self) -> "JetMap":
        """Same Taylor coefficients with base and value translated to the origin."""
        return JetMap((ZERO,) * self.source_dim, (ZERO,) * self.target_dim, self.order, self.coeffs)

    def is_group_element(self) -> bool:
        return (self.source_dim == self.target_dim and all(b == 0 for b in self.base)
                and all(v == 0 for v in self.value))

    def substitute(self, bindings: Mapping) -> "JetMap":
        return JetMap(tuple(substitute(b, bindings) for b in self.base),
                      tuple(substitute(v, bindings) for v in self.value), self.order,
                      tuple({a: substitute(c, bindings) for a, c in comp.items()} for comp in self.coeffs))

    def polynomials(self, offsets: Sequence[sp.Symbol]) -> list[sp.Expr]:
        """Components as explicit polynomials in the offset variables."""
        return [normalize(v + sum(c * sp.Mul(*[s ** e for s, e in zip(offsets, a)]) for a, c in comp.items()))
                for v, comp in zip(self.value, self.coeffs)]

    def __repr__(self) -> str:
        return f"JetMap(order={self.order}, base={self.base}, value={self.value}, coeffs={self.coeffs})"


def compose_jets(g: JetMap, f: JetMap) -> JetMap:
    """Jet of g∘f, truncated at the common order."""
    if g.order != f.order:
        raise JetMismatchError(f"orders {g.order} and {f.order} differ")
    if g.source_dim != f.target_dim:
        raise JetMismatchError("dimension mismatch in composition")
    if any(normalize(a - b) != 0 for a, b in zip(g.base, f.value)):
        raise JetMismatchError("base of the outer jet differs from the value of the inner jet")
    k = f.order
    inner = [dict(comp) for comp in f.coeffs]
    comps = []
    for comp in g.coeffs:
        poly = _poly_normalize(_poly_compose(comp, inner, f.source_dim, k))
        poly.pop(tuple([0] * f.source_dim), None)
        comps.append(poly)
    return JetMap(f.base, g.value, k, tuple(comps))


def invert_jet(f: JetMap) -> JetMap:
    """Inverse jet; the linear part must be invertible."""
    q = f.source_dim
    if f.target_dim != q:
        raise SingularJetError("non-square jet", code="singular-jet")
    L = f.linear_part()
    det = normalize(L.det(method="berkowitz"))
    if is_zero(det) is not ZeroStatus.PROVEN_NONZERO:
        raise SingularJetError("linear part is not invertible")
    Linv = inverse(L)
    k = f.order
    nonlinear = [{a: c for a, c in comp.items() if sum(a) >= 2} for comp in f.coeffs]
    g = [{unit(q, j): Linv[i, j] for j in range(q) if Linv[i, j] != 0} for i in range(q)]
    for _ in range(k - 1):
        n_of_g = [_poly_normalize(_poly_compose(comp, g, q, k)) for comp in nonlinear]
        rhs = [{**{unit(q, i): sp.Integer(1)}} for i in range(q)]
        rhs = [_poly_add(rhs[i], {a: -c for a, c in n_of_g[i].items()}) for i in range(q)]
        g = [_poly_normalize({a: sum((Linv[i, j] * rhs[j].get(a, ZERO) for j in range(q)), ZERO)
                              for a in set().union(*rhs)}) for i in range(q)]
    return JetMap(f.value, f.base, k, tuple(g))


def _has_pole(e: sp.Expr) -> bool:
    return e.has(sp.zoo, sp.nan, sp.oo, -sp.oo)


def prolong_map(phi: Sequence, coords: Sequence[str], at: Sequence, k: int) -> JetMap:
    """k-jet of the map ``phi`` (expressions in ``coords``) at the point ``at``.

    ``at`` may be symbolic; passing the coordinates themselves yields the jet field.
    """
    phi = [as_expr(p) for p in phi]
    at = [as_expr(a) for a in at]
    syms = [sp.Symbol(c) for c in coords]
    point = dict(zip(coords, at))

    def at_point(e: sp.Expr) -> sp.Expr:
        v = substitute(e, point)
        if _has_pole(v):
            raise EvaluationDomainError(f"{e} is singular at {at}")
        return v

    value = tuple(at_point(p) for p in phi)
    comps = []
    for p in phi:
        comp = {}
        for alpha in multi_indices_upto(len(coords), k):
            deriv = p
            for s, e in zip(syms, alpha):
                if e:
                    deriv = sp.diff(deriv, s, e)
            comp[alpha] = at_point(deriv) / factorial(alpha)
        comps.append(comp)
    return JetMap(tuple(at), value, k, tuple(comps))


def transition_2jet(h: Sequence, variables: Sequence[str], at: Sequence, order: int = 2) -> JetMap:
    """Jet of a transition map at ``at`` (the β-chart value), translated into G^k_q."""
    return prolong_map(h, variables, at, order).recentred()


def jets_equal(a: JetMap, b: JetMap) -> bool:
    if (a.order, a.source_dim, a.target_dim) != (b.order, b.source_dim, b.target_dim):
        return False
    pairs = list(zip(a.base, b.base)) + list(zip(a.value, b.value))
    for ca, cb in zip(a.coeffs, b.coeffs):
        pairs += [(ca.get(al, ZERO), cb.get(al, ZERO)) for al in set(ca) | set(cb)]
    return all(normalize(x - y) == 0 for x, y in pairs)
