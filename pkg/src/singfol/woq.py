"""The truncated DGA R[c_1..c_q]_q ⊗ Λ(h_1, h_3, ..., h_l) and its cohomology.

Monomials are ``c^a h_I`` with ``I`` a strictly increasing tuple of odd indices.
The truncation kills monomials whose c-part has degree above 2q (h-degrees do
not count). ``d c_i = 0`` and ``d h_j = c_j``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import sympy as sp

from . import gelfandfuks as gf


@dataclass(frozen=True, order=True)
class WOMonomial:
    c: tuple[int, ...]  # exponents of c_1..c_q
    h: tuple[int, ...] = ()  # odd indices, strictly increasing

    @property
    def q(self) -> int:
        return len(self.c)

    @property
    def c_degree(self) -> int:
        return sum(2 * (i + 1) * a for i, a in enumerate(self.c))

    @property
    def degree(self) -> int:
        return self.c_degree + sum(2 * j - 1 for j in self.h)

    def survives(self) -> bool:
        return self.c_degree <= 2 * self.q

    def text(self) -> str:
        parts = [f"h{j}" for j in self.h]
        for i, a in enumerate(self.c):
            if a == 1:
                parts.append(f"c{i + 1}")
            elif a > 1:
                parts.append(f"c{i + 1}^{a}")
        return "*".join(parts) or "1"


def h_indices(q: int) -> list[int]:
    return list(range(1, q + 1, 2))


def monomials(q: int) -> list[WOMonomial]:
    """Full monomial basis of WO_q in the fixed order (degree, then c, then h)."""
    cs = [a for a in itertools.product(*(range(q // (i + 1) + 1) for i in range(q)))
          if sum((i + 1) * x for i, x in enumerate(a)) <= q]
    hs = [I for r in range(len(h_indices(q)) + 1) for I in itertools.combinations(h_indices(q), r)]
    out = [WOMonomial(tuple(a), tuple(I)) for a in cs for I in hs]
    return sorted(out, key=lambda m: (m.degree, tuple(-x for x in m.c), m.h))


class WOElement:
    __slots__ = ("q", "terms")

    def __init__(self, q: int, terms: Mapping[WOMonomial, object] | None = None):
        clean = {}
        for m, v in (terms or {}).items():
            if m.q != q:
                raise ValueError("monomial from another q")
            v = Fraction(v)
            if v and m.survives():
                clean[m] = clean.get(m, Fraction(0)) + v
        self.q = q
        self.terms = {m: v for m, v in sorted(clean.items(), key=lambda kv: _order_key(kv[0])) if v}

    @classmethod
    def one(cls, q: int) -> "WOElement":
        return cls(q, {WOMonomial((0,) * q): 1})

    @classmethod
    def c(cls, i: int, q: int) -> "WOElement":
        if not 1 <= i <= q:
            raise ValueError(f"c_{i} is not a generator for q = {q}")
        return cls(q, {WOMonomial(tuple(1 if t == i - 1 else 0 for t in range(q))): 1})

    @classmethod
    def h(cls, j: int, q: int) -> "WOElement":
        if j not in h_indices(q):
            raise ValueError(f"h_{j} is not a generator for q = {q}")
        return cls(q, {WOMonomial((0,) * q, (j,)): 1})

    @classmethod
    def monomial(cls, m: WOMonomial) -> "WOElement":
        return cls(m.q, {m: 1})

    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: "WOElement") -> "WOElement":
        terms = dict(self.terms)
        for m, v in other.terms.items():
            terms[m] = terms.get(m, Fraction(0)) + v
        return WOElement(self.q, terms)

    def __neg__(self) -> "WOElement":
        return self.scale(-1)

    def __sub__(self, other: "WOElement") -> "WOElement":
        return self + (-other)

    def scale(self, c) -> "WOElement":
        return WOElement(self.q, {m: Fraction(c) * v for m, v in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, WOElement):
            return wo_multiply(self, other)
        return self.scale(other)

    def __eq__(self, other) -> bool:
        if not isinstance(other, WOElement):
            return NotImplemented
        return self.q == other.q and self.terms == other.terms

    def __hash__(self):
        return hash((self.q, tuple(self.terms.items())))

    def text(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for m, v in self.terms.items():
            body = m.text()
            if v == 1:
                parts.append(body)
            elif v == -1:
                parts.append(f"-{body}")
            else:
                parts.append(f"{v}*{body}")
        return " + ".join(parts).replace("+ -", "- ")

    __repr__ = text


def _order_key(m: WOMonomial):
    return (m.degree, tuple(-x for x in m.c), m.h)


def _h_product(I: tuple[int, ...], J: tuple[int, ...]) -> tuple[int, tuple[int, ...]] | None:
    if set(I) & set(J):
        return None
    inversions = sum(1 for i in I for j in J if i > j)
    return (-1) ** inversions, tuple(sorted(I + J))


def wo_multiply(x: WOElement, y: WOElement) -> WOElement:
    """Graded-commutative product; c's are even so only h reorderings carry signs."""
    if x.q != y.q:
        raise ValueError("different q")
    acc: dict[WOMonomial, Fraction] = {}
    for mx, vx in x.terms.items():
        for my, vy in y.terms.items():
            hp = _h_product(mx.h, my.h)
            if hp is None:
                continue
            sign, h = hp
            m = WOMonomial(tuple(a + b for a, b in zip(mx.c, my.c)), h)
            if m.survives():
                acc[m] = acc.get(m, Fraction(0)) + sign * vx * vy
    return WOElement(x.q, acc)


def wo_differential(x: WOElement) -> WOElement:
    acc: dict[WOMonomial, Fraction] = {}
    for m, v in x.terms.items():
        for pos, j in enumerate(m.h):
            c = tuple(a + (1 if t == j - 1 else 0) for t, a in enumerate(m.c))
            new = WOMonomial(c, m.h[:pos] + m.h[pos + 1:])
            if new.survives():
                acc[new] = acc.get(new, Fraction(0)) + (-1) ** pos * v
    return WOElement(x.q, acc)


def parse_element(text: str, q: int) -> WOElement:
    """Parse products like ``h1*c1^2`` joined by ``+``/``-`` with optional rational coefficients."""
    total = WOElement(q)
    for sign, term in _split_terms(text):
        value = WOElement.one(q).scale(sign)
        for factor in term.split("*"):
            factor = factor.strip()
            if not factor:
                raise ValueError(f"empty factor in {text!r}")
            if factor[0] in "ch" and factor[1:2].isdigit():
                base, _, power = factor.partition("^")
                gen = WOElement.c(int(base[1:]), q) if base[0] == "c" else WOElement.h(int(base[1:]), q)
                for _ in range(int(power) if power else 1):
                    value = value * gen
            else:
                value = value.scale(Fraction(factor))
        total = total + value
    return total


def _split_terms(text: str):
    text = text.replace(" ", "")
    if text in ("", "0"):
        return
    pieces, sign, cur = [], 1, ""
    for ch in text:
        if ch in "+-" and cur and not cur.endswith("^"):
            pieces.append((sign, cur))
            sign, cur = (1 if ch == "+" else -1), ""
        elif ch in "+-" and not cur:
            sign = sign * (1 if ch == "+" else -1)
        else:
            cur += ch
    pieces.append((sign, cur))
    yield from pieces


# ---------------------------------------------------------------- cohomology

@dataclass(frozen=True)
class CohomologyGroup:
    degree: int
    betti: int
    representatives: tuple[WOElement, ...]


def _basis_by_degree(q: int, order: Sequence[WOMonomial] | None = None) -> dict[int, list[WOMonomial]]:
    out: dict[int, list[WOMonomial]] = {}
    for m in order if order is not None else monomials(q):
        if m.survives():
            out.setdefault(m.degree, []).append(m)
    return out


def differential_matrix(source: Sequence[WOMonomial], target: Sequence[WOMonomial]) -> sp.Matrix:
    index = {m: r for r, m in enumerate(target)}
    M = sp.zeros(len(target), len(source))
    for col, m in enumerate(source):
        for t, v in wo_differential(WOElement.monomial(m)).terms.items():
            M[index[t], col] = sp.Rational(v.numerator, v.denominator)
    return M


def _normalized(vec, basis: Sequence[WOMonomial], q: int) -> WOElement:
    el = WOElement(q, {m: Fraction(int(sp.fraction(v)[0]), int(sp.fraction(v)[1])) for m, v in zip(basis, vec) if v != 0})
    lead = next(iter(el.terms.values()))
    return el.scale(1 / lead)


def wo_cohomology(q: int, degrees: Iterable[int] | None = None,
                  order: Sequence[WOMonomial] | None = None) -> list[CohomologyGroup]:
    """Betti numbers and representatives by exact rank computation."""
    by_deg = _basis_by_degree(q, order)
    top = max(by_deg)
    degrees = range(0, top + 1) if degrees is None else degrees
    out = []
    for n in degrees:
        here = by_deg.get(n, [])
        if not here:
            out.append(CohomologyGroup(n, 0, ()))
            continue
        below, above = by_deg.get(n - 1, []), by_deg.get(n + 1, [])
        d_out = differential_matrix(here, above) if above else sp.zeros(0, len(here))
        kernel = d_out.nullspace() if above else [sp.eye(len(here))[:, c] for c in range(len(here))]
        image_cols = differential_matrix(below, here) if below else sp.zeros(len(here), 0)
        image_rank = image_cols.rank() if below else 0
        span = image_cols
        reps = []
        for v in kernel:
            trial = v if span.cols == 0 else span.row_join(v)
            if trial.rank() > (span.rank() if span.cols else 0):
                span = trial
                reps.append(_normalized(list(v), here, q))
        betti = len(kernel) - image_rank
        assert betti == len(reps)
        out.append(CohomologyGroup(n, betti, tuple(reps)))
    return out


def is_exact(x: WOElement) -> bool:
    """True when x lies in the image of the differential (x homogeneous)."""
    if x.is_zero():
        return True
    degs = {m.degree for m in x.terms}
    if len(degs) != 1:
        raise ValueError("inhomogeneous element")
    n = degs.pop()
    by_deg = _basis_by_degree(x.q)
    here, below = by_deg.get(n, []), by_deg.get(n - 1, [])
    if not below:
        return False
    D = differential_matrix(below, here)
    v = sp.Matrix([sp.Rational(x.terms.get(m, Fraction(0)).numerator, x.terms.get(m, Fraction(0)).denominator)
                   for m in here])
    return D.rank() == D.row_join(v).rank()


# ---------------------------------------------------------------- embedding

def embed_gf(x: WOElement, q: int | None = None) -> gf.GFCochain:
    """Multiplicative extension of c_i -> universal c_i, h_j -> universal h_j."""
    q = x.q if q is None else q
    cs = {i: gf.universal_c(i, q) for i in range(1, q + 1)}
    hs = {j: gf.universal_h(j, q) for j in h_indices(q)}
    total: gf.GFCochain | None = None
    for m, v in x.terms.items():
        term = gf.GFCochain.one(q)
        for j in m.h:
            term = term.wedge(hs[j])
        for i, a in enumerate(m.c):
            for _ in range(a):
                term = term.wedge(cs[i + 1])
        term = term.scale(v)
        total = term if total is None else total + term
    return total if total is not None else gf.GFCochain.zero(q, 2, 0)
