"""Finite-order Gel'fand-Fuks cochains on formal vector fields of R^q.

Basis vectors of the truncated Lie algebra are monomial fields ``s^alpha d_i``;
a cochain is an exact rational combination of wedges of the dual functionals
``delta^i_alpha`` which act by ``delta^i_alpha(s^beta d_j) = (-1)^|alpha| alpha! [i=j, alpha=beta]``.
Indices are 0-based internally.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Sequence

from .errors import OrderOverflowError, PreconditionError

MAX_ORDER = 3

Label = tuple[int, tuple[int, ...]]  # (direction i, multi-index alpha)


def _order(label: Label) -> int:
    return sum(label[1])


def label_key(label: Label):
    return (_order(label), label[0], tuple(-a for a in label[1]))


def all_multi_indices(q: int, k: int) -> list[tuple[int, ...]]:
    out = [a for a in itertools.product(range(k + 1), repeat=q) if sum(a) <= k]
    return sorted(out, key=lambda a: (sum(a), tuple(-x for x in a)))


def basis(q: int, k: int) -> list[Label]:
    """Monomial fields s^alpha d_i with |alpha| <= k, in the fixed label order."""
    return sorted(((i, a) for i in range(q) for a in all_multi_indices(q, k)), key=label_key)


def label_text(label: Label) -> str:
    i, alpha = label
    lower = "".join(str(j + 1) * a for j, a in enumerate(alpha))
    return f"delta^{i + 1}_{lower}" if lower else f"delta^{i + 1}"


def _unit(q: int, j: int) -> tuple[int, ...]:
    return tuple(1 if t == j else 0 for t in range(q))


# ---------------------------------------------------------------- bracket

def bracket_monomials(X: Label, Y: Label, K: int | None = None) -> dict[Label, int]:
    """[s^a d_i, s^b d_j] = s^a d_i(s^b) d_j - s^b d_j(s^a) d_i, optionally truncated at order K."""
    (i, a), (j, b) = X, Y
    out: dict[Label, int] = {}
    if b[i]:
        m = tuple(x + y - (1 if t == i else 0) for t, (x, y) in enumerate(zip(a, b)))
        out[(j, m)] = out.get((j, m), 0) + b[i]
    if a[j]:
        m = tuple(x + y - (1 if t == j else 0) for t, (x, y) in enumerate(zip(a, b)))
        out[(i, m)] = out.get((i, m), 0) - a[j]
    return {l: c for l, c in out.items() if c and (K is None or _order(l) <= K)}


def bracket(x: Mapping[Label, object], y: Mapping[Label, object]) -> dict[Label, Fraction]:
    """Bracket of linear combinations of monomial fields."""
    out: dict[Label, Fraction] = {}
    for lx, cx in x.items():
        for ly, cy in y.items():
            for l, c in bracket_monomials(lx, ly).items():
                out[l] = out.get(l, Fraction(0)) + Fraction(cx) * Fraction(cy) * c
    return {l: c for l, c in out.items() if c}


def dual_value(label: Label) -> int:
    """delta_label evaluated on its own monomial: (-1)^|alpha| alpha!."""
    alpha = label[1]
    return (-1) ** sum(alpha) * math.prod(math.factorial(a) for a in alpha)


# ---------------------------------------------------------------- cochains

def _merge(a: tuple[Label, ...], b: tuple[Label, ...]):
    if set(a) & set(b):
        return None
    ka = [label_key(l) for l in a]
    kb = [label_key(l) for l in b]
    inversions = sum(1 for x in ka for y in kb if x > y)
    return (-1) ** inversions, tuple(sorted(a + b, key=label_key))


class GFCochain:
    """Alternating functional: rational combination of sorted wedges of dual functionals."""

    __slots__ = ("q", "order", "degree", "terms")

    def __init__(self, q: int, order: int, degree: int, terms: Mapping[tuple[Label, ...], object] | None = None):
        clean: dict[tuple[Label, ...], Fraction] = {}
        for labels, c in (terms or {}).items():
            labels = tuple(labels)
            if len(labels) != degree:
                raise ValueError("term length differs from degree")
            ordered = tuple(sorted(labels, key=label_key))
            if len(set(labels)) != len(labels):
                continue
            sign = _perm_sign([label_key(l) for l in labels])
            c = Fraction(c) * sign
            if c:
                clean[ordered] = clean.get(ordered, Fraction(0)) + c
        self.q, self.order, self.degree = q, order, degree
        self.terms = {k: v for k, v in sorted(clean.items(), key=lambda kv: [label_key(l) for l in kv[0]]) if v}

    @classmethod
    def zero(cls, q: int, order: int = 0, degree: int = 0) -> "GFCochain":
        return cls(q, order, degree, {})

    @classmethod
    def one(cls, q: int) -> "GFCochain":
        return cls(q, 0, 0, {(): 1})

    def is_zero(self) -> bool:
        return not self.terms

    def labels(self) -> set[Label]:
        return {l for key in self.terms for l in key}

    def max_label_order(self) -> int:
        return max((_order(l) for l in self.labels()), default=0)

    def __add__(self, other: "GFCochain") -> "GFCochain":
        if self.degree != other.degree and self.terms and other.terms:
            raise ValueError(f"cannot add degrees {self.degree} and {other.degree}")
        degree = self.degree if self.terms else other.degree
        terms = dict(self.terms)
        for k, v in other.terms.items():
            terms[k] = terms.get(k, Fraction(0)) + v
        return GFCochain(self.q, max(self.order, other.order), degree, terms)

    def __neg__(self) -> "GFCochain":
        return self.scale(-1)

    def __sub__(self, other: "GFCochain") -> "GFCochain":
        return self + (-other)

    def scale(self, c) -> "GFCochain":
        c = Fraction(c)
        return GFCochain(self.q, self.order, self.degree, {k: c * v for k, v in self.terms.items()})

    def wedge(self, other: "GFCochain") -> "GFCochain":
        acc: dict[tuple[Label, ...], Fraction] = {}
        for ka, ca in self.terms.items():
            for kb, cb in other.terms.items():
                merged = _merge(ka, kb)
                if merged is None:
                    continue
                sign, key = merged
                acc[key] = acc.get(key, Fraction(0)) + sign * ca * cb
        return GFCochain(self.q, max(self.order, other.order), self.degree + other.degree, acc)

    def __mul__(self, other):
        if isinstance(other, GFCochain):
            return self.wedge(other)
        return self.scale(other)

    __rmul__ = scale

    def evaluate(self, fields: Sequence[Mapping[Label, object] | Label]) -> Fraction:
        """Value on ``degree`` fields (monomial labels or linear combinations)."""
        if len(fields) != self.degree:
            raise ValueError(f"{self.degree}-cochain evaluated on {len(fields)} fields")
        vecs = [{f: 1} if isinstance(f, tuple) and len(f) == 2 and isinstance(f[0], int) else f for f in fields]
        total = Fraction(0)
        for key, c in self.terms.items():
            # determinant of [delta_{key[a]}(X_b)]
            m = [[Fraction(v.get(l, 0)) * dual_value(l) for v in vecs] for l in key]
            total += c * _det(m)
        return total

    def __eq__(self, other) -> bool:
        if not isinstance(other, GFCochain):
            return NotImplemented
        return self.q == other.q and self.terms == other.terms and (self.degree == other.degree or not self.terms)

    def __hash__(self):
        return hash((self.q, tuple(self.terms.items())))

    def __repr__(self) -> str:
        return f"GFCochain(q={self.q}, order={self.order}, degree={self.degree}, {to_text(self)})"


def to_text(c: GFCochain) -> str:
    if not c.terms:
        return "0"
    parts = []
    for key, v in c.terms.items():
        body = "^".join(label_text(l) for l in key) or "1"
        parts.append(f"{v}*{body}")
    return " + ".join(parts)


def _perm_sign(keys: Sequence) -> int:
    sign = 1
    for a, b in itertools.combinations(range(len(keys)), 2):
        if keys[a] > keys[b]:
            sign = -sign
    return sign


def _det(m: list[list[Fraction]]) -> Fraction:
    n = len(m)
    if n == 0:
        return Fraction(1)
    if n == 1:
        return m[0][0]
    if n == 2:
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]
    m = [row[:] for row in m]
    det = Fraction(1)
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
            det = -det
        det *= m[col][col]
        for r in range(col + 1, n):
            f = m[r][col] / m[col][col]
            if f:
                for k in range(col, n):
                    m[r][k] -= f * m[col][k]
    return det


# ---------------------------------------------------------------- generators

def delta_cochain(i: int, alpha: Sequence[int], q: int | None = None, order: int | None = None,
                  max_order: int = MAX_ORDER) -> GFCochain:
    """The degree-1 functional delta^i_alpha (0-based direction)."""
    alpha = tuple(alpha)
    q = len(alpha) if q is None else q
    if len(alpha) != q or not 0 <= i < q:
        raise ValueError("label outside R^q")
    if sum(alpha) > max_order:
        raise OrderOverflowError(f"|alpha| = {sum(alpha)} exceeds order {max_order}")
    return GFCochain(q, sum(alpha) if order is None else order, 1, {((i, alpha),): 1})


def delta_lower(q: int, i: int, *lower: int) -> GFCochain:
    """delta^i_{j k ...} with lower indices listed explicitly (0-based)."""
    alpha = [0] * q
    for j in lower:
        alpha[j] += 1
    return delta_cochain(i, alpha, q)


@lru_cache(maxsize=None)
def _generator_differential(label: Label, q: int) -> tuple[tuple[tuple[Label, Label], Fraction], ...]:
    """d delta_label = -sum_{a<b} delta_label([e_a, e_b]) e^a ^ e^b in the dual basis."""
    i, alpha = label
    n = sum(alpha) + 1
    monomials = [(j, b) for j in range(q) for t in range(n + 1) for b in _indices(q, t)]
    out: dict[tuple[Label, Label], Fraction] = {}
    own = dual_value(label)
    for x, y in itertools.combinations(sorted(monomials, key=label_key), 2):
        if _order(x) + _order(y) != n:
            continue
        c = bracket_monomials(x, y).get(label, 0)
        if not c:
            continue
        # e^x = delta_x / dual_value(x)
        coeff = Fraction(-c * own, dual_value(x) * dual_value(y))
        key = tuple(sorted((x, y), key=label_key))
        sign = 1 if key == (x, y) else -1
        out[key] = out.get(key, Fraction(0)) + sign * coeff
    return tuple((k, v) for k, v in out.items() if v)


@lru_cache(maxsize=None)
def _indices(q: int, total: int) -> tuple[tuple[int, ...], ...]:
    return tuple(a for a in itertools.product(range(total + 1), repeat=q) if sum(a) == total)


def ce_differential(c: GFCochain, max_order: int = MAX_ORDER) -> GFCochain:
    """Chevalley-Eilenberg differential, from structure constants and the Leibniz rule."""
    if c.order + 1 > max_order:
        raise OrderOverflowError(f"differential needs jet order {c.order + 1} > {max_order}")
    acc: dict[tuple[Label, ...], Fraction] = {}
    for key, coef in c.terms.items():
        for pos, label in enumerate(key):
            sign = (-1) ** pos
            before, after = key[:pos], key[pos + 1:]
            for pair, v in _generator_differential(label, c.q):
                new = before + pair + after
                if len(set(new)) != len(new):
                    continue
                s = _perm_sign([label_key(l) for l in new])
                k = tuple(sorted(new, key=label_key))
                acc[k] = acc.get(k, Fraction(0)) + sign * s * coef * v
    return GFCochain(c.q, c.order + 1, c.degree + 1, acc)


def ce_evaluate_direct(c: GFCochain, fields: Sequence[Label]) -> Fraction:
    """(dc)(X_0..X_p) = sum_{i<j} (-1)^{i+j} c([X_i, X_j], X_0..^i..^j..X_p); independent of ce_differential."""
    total = Fraction(0)
    for a, b in itertools.combinations(range(len(fields)), 2):
        br = bracket_monomials(fields[a], fields[b])
        if not br:
            continue
        rest = [f for t, f in enumerate(fields) if t not in (a, b)]
        total += (-1) ** (a + b) * c.evaluate([br] + rest)
    return total


# ---------------------------------------------------------------- matrices of cochains

Matrix = list[list[GFCochain]]


def _mat_wedge(a: Matrix, b: Matrix) -> Matrix:
    n = len(a)
    out = []
    for i in range(n):
        row = []
        for k in range(n):
            acc = a[i][0].wedge(b[0][k])
            for j in range(1, n):
                acc = acc + a[i][j].wedge(b[j][k])
            row.append(acc)
        out.append(row)
    return out


def _mat_add(a: Matrix, b: Matrix) -> Matrix:
    return [[x + y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def _mat_scale(a: Matrix, c) -> Matrix:
    return [[x.scale(c) for x in r] for r in a]


def _trace(a: Matrix) -> GFCochain:
    acc = a[0][0]
    for i in range(1, len(a)):
        acc = acc + a[i][i]
    return acc


def _transpose(a: Matrix) -> Matrix:
    return [list(r) for r in zip(*a)]


def connection_matrix(q: int) -> Matrix:
    """(delta^i_j): row i, column j."""
    return [[delta_lower(q, i, j) for j in range(q)] for i in range(q)]


def curvature_matrix(q: int) -> Matrix:
    """Delta^i_j = -sum_k delta^i_{jk} ^ delta^k."""
    out = []
    for i in range(q):
        row = []
        for j in range(q):
            acc = GFCochain.zero(q, 2, 2)
            for k in range(q):
                acc = acc - delta_lower(q, i, j, k).wedge(delta_lower(q, k))
            acc.order = 2
            row.append(acc)
        out.append(row)
    return out


def curvature_matrix_structural(q: int, max_order: int = MAX_ORDER) -> Matrix:
    """The same curvature from d delta^i_j + delta^i_k ^ delta^k_j (used as a cross-check)."""
    d = connection_matrix(q)
    dd = [[ce_differential(x, max_order) for x in r] for r in d]
    return _mat_add(dd, _mat_wedge(d, d))


def _power(a: Matrix, i: int) -> Matrix:
    out = a
    for _ in range(i - 1):
        out = _mat_wedge(out, a)
    return out


def universal_c(i: int, q: int) -> GFCochain:
    """c_i = Tr(Delta^i)."""
    if not 1 <= i <= q:
        raise ValueError(f"c_{i} is undefined for q = {q}")
    out = _trace(_power(curvature_matrix(q), i))
    out.order = 2
    return out


def universal_h(j: int, q: int) -> GFCochain:
    """h_j = j Tr int_0^1 delta_s ^ (t Delta_s + Delta_o + (t^2 - 1) delta_s^2)^(j-1) dt."""
    if j % 2 == 0 or not 1 <= j <= q:
        raise ValueError(f"h_{j} is undefined for q = {q}")
    d = connection_matrix(q)
    dt = _transpose(d)
    d_s = _mat_scale(_mat_add(d, dt), Fraction(1, 2))
    D = curvature_matrix(q)
    Dt = _transpose(D)
    D_s = _mat_scale(_mat_add(D, Dt), Fraction(1, 2))
    D_o = _mat_scale(_mat_add(D, _mat_scale(Dt, -1)), Fraction(1, 2))
    d_s2 = _mat_wedge(d_s, d_s)
    # t-polynomial of matrices: list indexed by power of t
    base = [_mat_add(D_o, _mat_scale(d_s2, -1)), D_s, d_s2]
    poly = [d_s]
    for _ in range(j - 1):
        nxt: list[Matrix | None] = [None] * (len(poly) + len(base) - 1)
        for a, pa in enumerate(poly):
            for b, pb in enumerate(base):
                term = _mat_wedge(pa, pb)
                nxt[a + b] = term if nxt[a + b] is None else _mat_add(nxt[a + b], term)
        poly = nxt
    out = GFCochain.zero(q, 2, 2 * j - 1)
    for k, m in enumerate(poly):
        out = out + _trace(m).scale(Fraction(j, k + 1))
    out.order = 2
    return out


# ---------------------------------------------------------------- O(q)-basic checks

def so_basis(q: int) -> list[list[list[int]]]:
    out = []
    for a, b in itertools.combinations(range(q), 2):
        m = [[0] * q for _ in range(q)]
        m[a][b], m[b][a] = 1, -1
        out.append(m)
    return out


def linear_field(xi: Sequence[Sequence]) -> dict[Label, Fraction]:
    """The linear vector field sum_{i,j} xi^i_j s^j d_i."""
    q = len(xi)
    return {(i, _unit(q, j)): Fraction(xi[i][j]) for i in range(q) for j in range(q) if xi[i][j]}


def contract(c: GFCochain, X: Mapping[Label, object]) -> GFCochain:
    """Insert the field X into the first slot."""
    if c.degree == 0:
        return GFCochain.zero(c.q, c.order, 0)
    acc: dict[tuple[Label, ...], Fraction] = {}
    for key, coef in c.terms.items():
        for pos, l in enumerate(key):
            v = Fraction(X.get(l, 0)) * dual_value(l)
            if v:
                rest = key[:pos] + key[pos + 1:]
                acc[rest] = acc.get(rest, Fraction(0)) + (-1) ** pos * coef * v
    return GFCochain(c.q, c.order, c.degree - 1, acc)


def contract_so(c: GFCochain, xi: Sequence[Sequence]) -> GFCochain:
    q = len(xi)
    if any(Fraction(xi[i][j]) != -Fraction(xi[j][i]) for i in range(q) for j in range(q)):
        raise PreconditionError("xi is not antisymmetric")
    return contract(c, linear_field(xi))


@dataclass(frozen=True)
class BasicCheck:
    name: str
    passed: bool
    detail: str = ""


def check_oq_basic(c: GFCochain, max_order: int = MAX_ORDER) -> list[BasicCheck]:
    """iota_xi c = 0 and (d iota_xi + iota_xi d) c = 0 for a basis of so(q)."""
    out = []
    for n, xi in enumerate(so_basis(c.q)):
        ic = contract_so(c, xi)
        out.append(BasicCheck(f"iota[{n}]", ic.is_zero(), to_text(ic)))
        lie = contract_so(ce_differential(c, max_order), xi)
        if ic.terms:
            lie = lie + ce_differential(ic, max_order)
        out.append(BasicCheck(f"lie[{n}]", lie.is_zero(), to_text(lie)))
    return out


def structure_equation_residuals(q: int, max_order: int = MAX_ORDER) -> list[tuple[str, GFCochain]]:
    """Residuals of d delta^i + delta^i_j ^ delta^j and d delta^i_j + delta^i_{jk} ^ delta^k + delta^i_k ^ delta^k_j."""
    out = []
    for i in range(q):
        r = ce_differential(delta_lower(q, i), max_order)
        for j in range(q):
            r = r + delta_lower(q, i, j).wedge(delta_lower(q, j))
        out.append((f"first[{i + 1}]", r))
    for i in range(q):
        for j in range(q):
            r = ce_differential(delta_lower(q, i, j), max_order)
            for k in range(q):
                r = r + delta_lower(q, i, j, k).wedge(delta_lower(q, k))
                r = r + delta_lower(q, i, k).wedge(delta_lower(q, k, j))
            out.append((f"second[{i + 1},{j + 1}]", r))
    return out
