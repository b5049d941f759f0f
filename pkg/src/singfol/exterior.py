"""Differential forms on a coordinate chart with exact coefficients.

A form is a map from strictly increasing index tuples to coefficients; the
sign of a wedge is fixed at insertion so equality is a syntactic comparison of
normalized coefficients. Matrix-valued forms and polynomials in an auxiliary
parameter ``t`` sit on top of the same type.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import sympy as sp

from .errors import ChartMismatchError, DegreeMismatchError, DimensionMismatchError, SpecSemanticError
from .expr import (ZERO, ZeroStatus, ZeroTest, as_expr, differentiate, normalize,
                   substitute, zero_test)
from .syntax import fold, parse_ast, to_text


@dataclass(frozen=True)
class Chart:
    name: str
    coords: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(self.coords))
        if len(set(self.coords)) != len(self.coords):
            raise ValueError(f"repeated coordinate names in {self.coords}")

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def symbols(self) -> tuple[sp.Symbol, ...]:
        return tuple(sp.Symbol(c) for c in self.coords)

    def index(self, coord: str) -> int:
        return self.coords.index(coord)


def _merge_sign(a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, tuple[int, ...]] | None:
    """Sign and sorted union of dx^a ^ dx^b, or None when they share an index."""
    if set(a) & set(b):
        return None
    inversions = sum(1 for i in a for j in b if i > j)
    return (-1) ** inversions, tuple(sorted(a + b))


class DiffForm:
    """Homogeneous differential form ``sum_I c_I dx^I`` on one chart."""

    __slots__ = ("chart", "degree", "terms")

    def __init__(self, chart: Chart, terms: Mapping[tuple[int, ...], object] | None = None,
                 degree: int | None = None, normalized: bool = False):
        clean: dict[tuple[int, ...], sp.Expr] = {}
        for idx, coef in (terms or {}).items():
            idx = tuple(idx)
            if list(idx) != sorted(set(idx)) or (idx and (idx[0] < 0 or idx[-1] >= chart.dim)):
                raise ValueError(f"bad multi-index {idx}")
            if degree is None:
                degree = len(idx)
            elif len(idx) != degree:
                raise DegreeMismatchError(f"mixed degrees {degree} and {len(idx)}")
            c = as_expr(coef) if normalized else normalize(coef)
            if c != 0:
                clean[idx] = c
        self.chart = chart
        self.degree = 0 if degree is None else degree
        self.terms = dict(sorted(clean.items()))

    # construction helpers
    @classmethod
    def zero(cls, chart: Chart, degree: int = 0) -> "DiffForm":
        return cls(chart, {}, degree)

    @classmethod
    def scalar(cls, chart: Chart, f) -> "DiffForm":
        return cls(chart, {(): f}, 0)

    @classmethod
    def dcoord(cls, chart: Chart, coord: str | int, coef=1) -> "DiffForm":
        i = coord if isinstance(coord, int) else chart.index(coord)
        return cls(chart, {(i,): coef}, 1)

    @classmethod
    def one_form(cls, chart: Chart, coefs: Sequence) -> "DiffForm":
        return cls(chart, {(i,): c for i, c in enumerate(coefs)}, 1)

    # queries
    def coefficient(self, idx: Iterable[int]) -> sp.Expr:
        return self.terms.get(tuple(idx), ZERO)

    def coefficient_of(self, *coords: str) -> sp.Expr:
        """Coefficient of dcoords[0]^...; the sign of the reordering is applied."""
        idx = [self.chart.index(c) for c in coords]
        perm_sign = 1
        for a, b in itertools.combinations(range(len(idx)), 2):
            if idx[a] > idx[b]:
                perm_sign = -perm_sign
        if len(set(idx)) != len(idx):
            return ZERO
        return normalize(perm_sign * self.coefficient(sorted(idx)))

    def is_syntactic_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def scalar_value(self) -> sp.Expr:
        if self.degree != 0:
            raise DegreeMismatchError("not a 0-form")
        return self.coefficient(())

    def zero_test(self, **kwargs) -> ZeroTest:
        """Joint zero test of all coefficients; the weakest verdict wins."""
        results = [zero_test(c, names=self.chart.coords, **kwargs) for c in self.terms.values()]
        for status in (ZeroStatus.PROVEN_NONZERO, ZeroStatus.UNDECIDED):
            for r in results:
                if r.status is status:
                    return r
        for r in results:
            if r.method != "normal-form":
                return r
        return ZeroTest(ZeroStatus.PROVEN_ZERO, "normal-form")

    def _check(self, other: "DiffForm"):
        if self.chart != other.chart:
            raise ChartMismatchError(f"{self.chart.name} vs {other.chart.name}")

    # arithmetic
    def __add__(self, other: "DiffForm") -> "DiffForm":
        if not isinstance(other, DiffForm):
            return NotImplemented
        self._check(other)
        if self.degree != other.degree:
            raise DegreeMismatchError(f"cannot add degrees {self.degree} and {other.degree}")
        terms = dict(self.terms)
        for k, v in other.terms.items():
            terms[k] = terms.get(k, ZERO) + v
        return DiffForm(self.chart, terms, self.degree)

    def __neg__(self) -> "DiffForm":
        return DiffForm(self.chart, {k: -v for k, v in self.terms.items()}, self.degree, normalized=True)

    def __sub__(self, other: "DiffForm") -> "DiffForm":
        return self + (-other)

    def scale(self, f) -> "DiffForm":
        f = as_expr(f)
        return DiffForm(self.chart, {k: f * v for k, v in self.terms.items()}, self.degree)

    def __mul__(self, other):
        if isinstance(other, DiffForm):
            return self.wedge(other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def wedge(self, other: "DiffForm") -> "DiffForm":
        self._check(other)
        degree = self.degree + other.degree
        if degree > self.chart.dim:
            return _zero_of_degree(self.chart, degree)
        acc: dict[tuple[int, ...], sp.Expr] = {}
        for ia, ca in self.terms.items():
            for ib, cb in other.terms.items():
                merged = _merge_sign(ia, ib)
                if merged is None:
                    continue
                sign, idx = merged
                acc[idx] = acc.get(idx, ZERO) + sign * ca * cb
        return DiffForm(self.chart, acc, degree)

    def d(self) -> "DiffForm":
        if self.degree + 1 > self.chart.dim:
            return _zero_of_degree(self.chart, self.degree + 1)
        acc: dict[tuple[int, ...], sp.Expr] = {}
        for idx, c in self.terms.items():
            for j, name in enumerate(self.chart.coords):
                if j in idx:
                    continue
                dc = differentiate(c, name)
                if dc == 0:
                    continue
                sign = (-1) ** sum(1 for i in idx if i < j)
                key = tuple(sorted(idx + (j,)))
                acc[key] = acc.get(key, ZERO) + sign * dc
        return DiffForm(self.chart, acc, self.degree + 1)

    def pullback(self, phi: Sequence, source: Chart) -> "DiffForm":
        """Pull back along ``phi`` (components in the source coordinates)."""
        phi = [as_expr(p) for p in phi]
        if len(phi) != self.chart.dim:
            raise DimensionMismatchError(f"map has {len(phi)} components, chart has dimension {self.chart.dim}")
        if self.degree > source.dim:
            return _zero_of_degree(source, self.degree)
        binding = dict(zip(self.chart.coords, phi))
        jac = [[differentiate(p, u) for u in source.coords] for p in phi]
        acc: dict[tuple[int, ...], sp.Expr] = {}
        for idx, c in self.terms.items():
            c_pulled = substitute(c, binding)
            if not idx:
                acc[()] = acc.get((), ZERO) + c_pulled
                continue
            for cols in itertools.combinations(range(source.dim), len(idx)):
                minor = sp.Matrix([[jac[r][s] for s in cols] for r in idx]).det(method="berkowitz")
                if minor != 0:
                    acc[cols] = acc.get(cols, ZERO) + c_pulled * minor
        return DiffForm(source, acc, self.degree)

    def substitute(self, bindings: Mapping) -> "DiffForm":
        """Substitute into coefficients only (no Jacobian); used for pointwise evaluation."""
        return DiffForm(self.chart, {k: substitute(v, bindings) for k, v in self.terms.items()}, self.degree)

    def on_vectors(self, *fields: Sequence) -> sp.Expr:
        """Evaluate on vector fields (component lists in the coordinate basis)."""
        if len(fields) != self.degree:
            raise DegreeMismatchError(f"{self.degree}-form applied to {len(fields)} vectors")
        total = ZERO
        for idx, c in self.terms.items():
            if not idx:
                total += c
                continue
            m = sp.Matrix([[as_expr(X[i]) for X in fields] for i in idx])
            total += c * m.det(method="berkowitz")
        return normalize(total)

    def interior(self, X: Sequence) -> "DiffForm":
        """Contraction with a vector field into the first slot."""
        if self.degree == 0:
            raise DegreeMismatchError("cannot contract a 0-form")
        acc: dict[tuple[int, ...], sp.Expr] = {}
        for idx, c in self.terms.items():
            for pos, i in enumerate(idx):
                rest = idx[:pos] + idx[pos + 1:]
                acc[rest] = acc.get(rest, ZERO) + (-1) ** pos * as_expr(X[i]) * c
        return DiffForm(self.chart, acc, self.degree - 1)

    def map_coefficients(self, fn: Callable[[sp.Expr], object]) -> "DiffForm":
        return DiffForm(self.chart, {k: fn(v) for k, v in self.terms.items()}, self.degree)

    def __eq__(self, other) -> bool:
        if not isinstance(other, DiffForm):
            return NotImplemented
        return self.chart == other.chart and self.degree == other.degree and self.terms == other.terms

    def __hash__(self):
        return hash((self.chart, self.degree, tuple(self.terms.items())))

    def to_text(self) -> str:
        return form_to_text(self)

    def __repr__(self) -> str:
        return f"DiffForm<{self.chart.name},{self.degree}>({form_to_text(self)})"


def _zero_of_degree(chart: Chart, degree: int) -> DiffForm:
    # forms of degree above the dimension exist only as zero
    return DiffForm(chart, {}, degree)


def wedge(a: DiffForm, b: DiffForm) -> DiffForm:
    return a.wedge(b)


def exterior_derivative(a: DiffForm) -> DiffForm:
    return a.d()


def pullback(a: DiffForm, phi: Sequence, source: Chart) -> DiffForm:
    return a.pullback(phi, source)


def wedge_all(forms: Sequence[DiffForm], chart: Chart | None = None) -> DiffForm:
    if not forms:
        if chart is None:
            raise ValueError("empty wedge needs a chart")
        return DiffForm.scalar(chart, 1)
    out = forms[0]
    for f in forms[1:]:
        out = out.wedge(f)
    return out


# ---------------------------------------------------------------- matrices

class MatrixForm:
    """Square matrix of forms sharing chart and degree."""

    __slots__ = ("chart", "degree", "rows")

    def __init__(self, rows: Sequence[Sequence[DiffForm]]):
        rows = [list(r) for r in rows]
        if not rows or any(len(r) != len(rows) for r in rows):
            raise DimensionMismatchError("matrix form must be square and non-empty")
        first = rows[0][0]
        for r in rows:
            for e in r:
                if e.chart != first.chart:
                    raise ChartMismatchError("entries on different charts")
                if e.degree != first.degree:
                    raise DegreeMismatchError("entries of different degree")
        self.chart, self.degree, self.rows = first.chart, first.degree, rows

    @classmethod
    def zero(cls, chart: Chart, size: int, degree: int = 1) -> "MatrixForm":
        return cls([[_zero_of_degree(chart, degree) for _ in range(size)] for _ in range(size)])

    @classmethod
    def from_functions(cls, chart: Chart, m: sp.Matrix) -> "MatrixForm":
        return cls([[DiffForm.scalar(chart, m[i, j]) for j in range(m.cols)] for i in range(m.rows)])

    @property
    def size(self) -> int:
        return len(self.rows)

    def __getitem__(self, ij) -> DiffForm:
        i, j = ij
        return self.rows[i][j]

    def _check(self, other: "MatrixForm"):
        if self.size != other.size:
            raise DimensionMismatchError(f"sizes {self.size} and {other.size}")

    def __add__(self, other: "MatrixForm") -> "MatrixForm":
        self._check(other)
        return MatrixForm([[a + b for a, b in zip(ra, rb)] for ra, rb in zip(self.rows, other.rows)])

    def __sub__(self, other: "MatrixForm") -> "MatrixForm":
        self._check(other)
        return MatrixForm([[a - b for a, b in zip(ra, rb)] for ra, rb in zip(self.rows, other.rows)])

    def __neg__(self) -> "MatrixForm":
        return MatrixForm([[-a for a in r] for r in self.rows])

    def scale(self, f) -> "MatrixForm":
        return MatrixForm([[a.scale(f) for a in r] for r in self.rows])

    def transpose(self) -> "MatrixForm":
        n = self.size
        return MatrixForm([[self.rows[j][i] for j in range(n)] for i in range(n)])

    def wedge(self, other: "MatrixForm") -> "MatrixForm":
        self._check(other)
        n = self.size
        out = []
        for i in range(n):
            row = []
            for k in range(n):
                acc = _zero_of_degree(self.chart, self.degree + other.degree)
                for j in range(n):
                    acc = _add_any(acc, self.rows[i][j].wedge(other.rows[j][k]))
                row.append(acc)
            out.append(row)
        return MatrixForm(out)

    def left_mul(self, m: sp.Matrix) -> "MatrixForm":
        """Function matrix times form matrix."""
        n = self.size
        return MatrixForm([[_sum_forms([self.rows[j][k].scale(m[i, j]) for j in range(n)], self.chart, self.degree)
                            for k in range(n)] for i in range(n)])

    def right_mul(self, m: sp.Matrix) -> "MatrixForm":
        n = self.size
        return MatrixForm([[_sum_forms([self.rows[i][j].scale(m[j, k]) for j in range(n)], self.chart, self.degree)
                            for k in range(n)] for i in range(n)])

    def d(self) -> "MatrixForm":
        return MatrixForm([[a.d() for a in r] for r in self.rows])

    def trace(self) -> DiffForm:
        return _sum_forms([self.rows[i][i] for i in range(self.size)], self.chart, self.degree)

    def pullback(self, phi: Sequence, source: Chart) -> "MatrixForm":
        return MatrixForm([[a.pullback(phi, source) for a in r] for r in self.rows])

    def on_vectors(self, *fields) -> sp.Matrix:
        return sp.Matrix([[a.on_vectors(*fields) for a in r] for r in self.rows])

    def map_entries(self, fn: Callable[[DiffForm], DiffForm]) -> "MatrixForm":
        return MatrixForm([[fn(a) for a in r] for r in self.rows])

    def is_syntactic_zero(self) -> bool:
        return all(a.is_syntactic_zero() for r in self.rows for a in r)

    def __eq__(self, other) -> bool:
        if not isinstance(other, MatrixForm):
            return NotImplemented
        return self.rows == other.rows

    def __repr__(self) -> str:
        return "MatrixForm[" + "; ".join(", ".join(form_to_text(a) for a in r) for r in self.rows) + "]"


def _add_any(a: DiffForm, b: DiffForm) -> DiffForm:
    # sum where either side may be an above-dimension zero
    if not a.terms and a.degree == b.degree:
        return b
    if not b.terms and a.degree == b.degree:
        return a
    return a + b


def _sum_forms(forms: Sequence[DiffForm], chart: Chart, degree: int) -> DiffForm:
    acc: dict[tuple[int, ...], sp.Expr] = {}
    for f in forms:
        for k, v in f.terms.items():
            acc[k] = acc.get(k, ZERO) + v
    if degree > chart.dim:
        return _zero_of_degree(chart, degree)
    return DiffForm(chart, acc, degree)


def matrix_wedge(a: MatrixForm, b: MatrixForm) -> MatrixForm:
    return a.wedge(b)


def trace(a: MatrixForm) -> DiffForm:
    return a.trace()


def matrix_power_wedge(a: MatrixForm, i: int) -> MatrixForm:
    if i < 1:
        raise ValueError("power must be positive")
    out = a
    for _ in range(i - 1):
        out = out.wedge(a)
    return out


# ---------------------------------------------------------------- t-polynomials

class TPolyForm:
    """Polynomial in a formal parameter t with form coefficients of one degree."""

    __slots__ = ("chart", "degree", "coefficients")

    def __init__(self, coefficients: Sequence[DiffForm], chart: Chart | None = None, degree: int | None = None):
        coefs = list(coefficients)
        if coefs:
            chart, degree = coefs[0].chart, coefs[0].degree
        if chart is None or degree is None:
            raise ValueError("empty TPolyForm needs chart and degree")
        while coefs and coefs[-1].is_syntactic_zero():
            coefs.pop()
        self.chart, self.degree, self.coefficients = chart, degree, coefs

    @classmethod
    def constant(cls, a: DiffForm) -> "TPolyForm":
        return cls([a], a.chart, a.degree)

    @classmethod
    def linear(cls, a0: DiffForm, a1: DiffForm) -> "TPolyForm":
        return cls([a0, a1], a0.chart, a0.degree)

    def coefficient(self, k: int) -> DiffForm:
        if k < len(self.coefficients):
            return self.coefficients[k]
        return _zero_of_degree(self.chart, self.degree)

    def __add__(self, other: "TPolyForm") -> "TPolyForm":
        n = max(len(self.coefficients), len(other.coefficients))
        return TPolyForm([_add_any(self.coefficient(k), other.coefficient(k)) for k in range(n)],
                         self.chart, self.degree)

    def __neg__(self) -> "TPolyForm":
        return TPolyForm([-c for c in self.coefficients], self.chart, self.degree)

    def wedge(self, other: "TPolyForm") -> "TPolyForm":
        degree = self.degree + other.degree
        if not self.coefficients or not other.coefficients:
            return TPolyForm([], self.chart, degree)
        n = len(self.coefficients) + len(other.coefficients) - 1
        out = [_zero_of_degree(self.chart, degree) for _ in range(n)]
        for i, a in enumerate(self.coefficients):
            for j, b in enumerate(other.coefficients):
                out[i + j] = _add_any(out[i + j], a.wedge(b))
        return TPolyForm(out, self.chart, degree)

    def d(self) -> "TPolyForm":
        return TPolyForm([c.d() for c in self.coefficients], self.chart, self.degree + 1)


def integrate_t01(p: TPolyForm) -> DiffForm:
    """Exact integral over t in [0, 1]: sum_k coefficient_k / (k + 1)."""
    return _sum_forms([c.scale(sp.Rational(1, k + 1)) for k, c in enumerate(p.coefficients)],
                      p.chart, p.degree)


class TPolyMatrix:
    """Square matrix of TPolyForm entries."""

    def __init__(self, rows: Sequence[Sequence[TPolyForm]]):
        self.rows = [list(r) for r in rows]
        self.size = len(self.rows)

    @classmethod
    def linear(cls, a0: MatrixForm, a1: MatrixForm) -> "TPolyMatrix":
        n = a0.size
        return cls([[TPolyForm.linear(a0[i, j], a1[i, j]) for j in range(n)] for i in range(n)])

    def __add__(self, other: "TPolyMatrix") -> "TPolyMatrix":
        return TPolyMatrix([[a + b for a, b in zip(ra, rb)] for ra, rb in zip(self.rows, other.rows)])

    def d(self) -> "TPolyMatrix":
        return TPolyMatrix([[a.d() for a in r] for r in self.rows])

    def wedge(self, other: "TPolyMatrix") -> "TPolyMatrix":
        n = self.size
        out = []
        for i in range(n):
            row = []
            for k in range(n):
                acc = self.rows[i][0].wedge(other.rows[0][k])
                for j in range(1, n):
                    acc = acc + self.rows[i][j].wedge(other.rows[j][k])
                row.append(acc)
            out.append(row)
        return TPolyMatrix(out)

    def trace(self) -> TPolyForm:
        acc = self.rows[0][0]
        for i in range(1, self.size):
            acc = acc + self.rows[i][i]
        return acc


# ---------------------------------------------------------------- text

def form_to_text(a: DiffForm) -> str:
    """Serialize as ``(c)*dx*dy + ...``; the zero form is ``0``."""
    if not a.terms:
        return "0"
    parts = []
    for idx, c in a.terms.items():
        if not idx:
            parts.append(to_text(c))
        else:
            parts.append(f"({to_text(c)})*" + "*".join("d" + a.chart.coords[i] for i in idx))
    return " + ".join(parts)


def matrix_to_text(m: MatrixForm) -> str:
    return "[" + ", ".join("[" + ", ".join(form_to_text(e) for e in r) + "]" for r in m.rows) + "]"


class _FormOps:
    def __init__(self, chart: Chart):
        self.chart = chart

    @staticmethod
    def _scalar(a: DiffForm, tok, what: str) -> sp.Expr:
        if a.degree != 0:
            raise SpecSemanticError(f"{what} must be a function, not a {a.degree}-form", tok.line, tok.col)
        return a.coefficient(())

    def neg(self, a):
        return -a

    def add(self, a, b, tok):
        return self._sum(a, b, tok, 1)

    def sub(self, a, b, tok):
        return self._sum(a, b, tok, -1)

    def _sum(self, a, b, tok, sign):
        if a.degree != b.degree:
            if not a.terms:
                return b if sign > 0 else -b
            if not b.terms:
                return a
            raise SpecSemanticError(f"cannot add forms of degree {a.degree} and {b.degree}", tok.line, tok.col)
        return a + b if sign > 0 else a - b

    def mul(self, a, b, tok):
        return a.wedge(b)

    def div(self, a, b, tok):
        den = self._scalar(b, tok, "divisor")
        if den == 0:
            raise SpecSemanticError("division by zero", tok.line, tok.col)
        return a.scale(1 / den)

    def pow(self, a, n, tok):
        base = self._scalar(a, tok, "base of a power")
        if base == 0 and n < 0:
            raise SpecSemanticError("division by zero", tok.line, tok.col)
        return DiffForm.scalar(self.chart, base ** n)

    def call(self, name, a, tok):
        from .expr import FUNCTIONS
        return DiffForm.scalar(self.chart, FUNCTIONS[name](self._scalar(a, tok, "function argument")))


def ast_to_form(node, chart: Chart, degree: int | None = None) -> DiffForm:
    def leaf(kind, tok, payload):
        if kind == "num":
            return DiffForm.scalar(chart, sp.Rational(payload.numerator, payload.denominator))
        if payload in chart.coords:
            return DiffForm.scalar(chart, sp.Symbol(payload))
        if payload.startswith("d") and payload[1:] in chart.coords:
            return DiffForm.dcoord(chart, payload[1:])
        raise SpecSemanticError(f"unknown identifier {payload!r}", tok.line, tok.col)

    out = fold(node, leaf, _FormOps(chart))
    if degree is not None and out.degree != degree:
        if out.terms:
            tok = node[1]
            raise SpecSemanticError(f"expected a {degree}-form, got degree {out.degree}", tok.line, tok.col)
        out = _zero_of_degree(chart, degree) if degree > chart.dim else DiffForm.zero(chart, degree)
    return out


def parse_form(text: str, chart: Chart, degree: int | None = None, line: int = 1, col: int = 1) -> DiffForm:
    """Parse form syntax: ``d<coord>`` is a 1-form, ``*`` (or juxtaposition) is wedge."""
    return ast_to_form(parse_ast(text, line, col, juxtapose=True), chart, degree)


# ---------------------------------------------------------------- vector fields

def vf_apply(X: Sequence, f, chart: Chart) -> sp.Expr:
    """Directional derivative X(f) for X given by coordinate components."""
    f = as_expr(f)
    return normalize(sum((as_expr(X[i]) * sp.diff(f, s) for i, s in enumerate(chart.symbols)), ZERO))


def vf_bracket(X: Sequence, Y: Sequence, chart: Chart) -> list[sp.Expr]:
    """[X, Y]^k = X(Y^k) - Y(X^k)."""
    return [normalize(vf_apply(X, Y[k], chart) - vf_apply(Y, X[k], chart)) for k in range(chart.dim)]


def coordinate_field(chart: Chart, i: int) -> list[sp.Expr]:
    return [sp.Integer(1) if j == i else ZERO for j in range(chart.dim)]
