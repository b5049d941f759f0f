"""Exact scalar expressions over named chart coordinates.

Expressions are sympy trees restricted to the fragment used throughout the
package: rational constants, coordinate symbols, sums, products, integer
powers and the unary functions ``sqrt``, ``exp``, ``log``, ``sin``, ``cos``.
Sympy already keeps sums and products flattened and sorted with constants
folded; :func:`normalize` additionally puts rational-function content over a
single reduced denominator, which makes zero a syntactic property on the
polynomial/rational fragment.
"""
from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import sympy as sp

from .errors import EvaluationDomainError, UnboundVariableError, UnknownVariableError

Expr = sp.Expr

FUNCTIONS = {"sqrt": sp.sqrt, "exp": sp.exp, "log": sp.log, "sin": sp.sin, "cos": sp.cos}

ZERO = sp.Integer(0)
ONE = sp.Integer(1)

# sampling thresholds for numeric zero-testing
ZERO_TOL = 1e-10
NONZERO_TOL = 1e-6


class ZeroStatus(enum.Enum):
    PROVEN_ZERO = "proven-zero"
    PROVEN_NONZERO = "proven-nonzero"
    UNDECIDED = "undecided"


def sym(name: str) -> sp.Symbol:
    return sp.Symbol(name)


def symbols(names: Iterable[str]) -> tuple[sp.Symbol, ...]:
    return tuple(sp.Symbol(n) for n in names)


def const(value) -> Expr:
    """Exact constant from an int, Fraction or ``"p/q"`` string."""
    if isinstance(value, Fraction):
        return sp.Rational(value.numerator, value.denominator)
    if isinstance(value, float):
        raise TypeError("floats are not exact; pass a Fraction or string")
    return sp.Rational(value)


def as_expr(value) -> Expr:
    if isinstance(value, sp.Basic):
        return value
    if isinstance(value, (int, Fraction)):
        return const(value)
    if isinstance(value, str):
        from .syntax import parse_expr
        return parse_expr(value)
    return sp.sympify(value)


def normalize(e) -> Expr:
    """Canonical form: reduced single fraction with expanded numerator and denominator.

    Idempotent, value preserving, and returns 0 for every identically-zero
    expression in the rational fragment (non-rational subterms such as
    ``sqrt(u)`` or ``exp(u)`` are treated as extra generators).
    """
    e = as_expr(e)
    if e.is_Atom:
        return e
    return sp.cancel(sp.together(e))


def free_names(e) -> set[str]:
    return {s.name for s in as_expr(e).free_symbols}


def differentiate(e, v, coords: Sequence[str] | None = None) -> Expr:
    name = v.name if isinstance(v, sp.Symbol) else str(v)
    if coords is not None and name not in coords:
        raise UnknownVariableError(f"unknown variable {name!r}")
    return normalize(sp.diff(as_expr(e), sp.Symbol(name)))


def substitute(e, bindings: Mapping) -> Expr:
    """Simultaneous substitution followed by :func:`normalize`."""
    if not bindings:
        return normalize(e)
    mapping = {(sp.Symbol(k) if isinstance(k, str) else k): as_expr(v) for k, v in bindings.items()}
    return normalize(as_expr(e).subs(mapping, simultaneous=True))


@lru_cache(maxsize=8192)
def _compiled(e: Expr, names: tuple[str, ...]):
    return sp.lambdify([sp.Symbol(n) for n in names], e, modules="math")


def evaluate(e, point: Mapping) -> float:
    """Machine-precision value of ``e`` at ``point`` (names or symbols to numbers)."""
    e = as_expr(e)
    values = {(k.name if isinstance(k, sp.Symbol) else k): v for k, v in point.items()}
    missing = free_names(e) - values.keys()
    if missing:
        raise UnboundVariableError(f"unbound variables {sorted(missing)}")
    names = tuple(sorted(free_names(e)))
    fn = _compiled(e, names)
    try:
        value = fn(*(float(values[n]) for n in names))
    except (ValueError, ZeroDivisionError, OverflowError) as exc:
        raise EvaluationDomainError(str(exc)) from None
    if isinstance(value, complex):
        raise EvaluationDomainError("complex value")
    value = float(value)
    if math.isnan(value) or math.isinf(value):
        raise EvaluationDomainError("non-finite value")
    return value


def is_polynomial(e) -> bool:
    e = as_expr(e)
    syms = sorted(e.free_symbols, key=str)
    return e.is_polynomial(*syms) if syms else e.is_Rational


def total_degree(e) -> int:
    e = as_expr(e)
    syms = sorted(e.free_symbols, key=str)
    if not syms:
        return 0
    return sp.Poly(e, *syms).total_degree()


def random_rational(rng: random.Random, bound: int = 3, denom: int = 16) -> Fraction:
    d = rng.randint(1, denom)
    return Fraction(rng.randint(-bound * d, bound * d), d)


def sample_point(names: Sequence[str], rng: random.Random, domain: Sequence = (),
                 tries: int = 200, bound: int = 3) -> dict[str, Fraction] | None:
    """A random rational point satisfying every ``domain`` constraint (expr > 0)."""
    for _ in range(tries):
        pt = {n: random_rational(rng, bound) for n in names}
        try:
            if all(evaluate(c, pt) > 0 for c in domain):
                return pt
        except EvaluationDomainError:
            continue
    return None


@dataclass(frozen=True)
class ZeroTest:
    status: ZeroStatus
    method: str  # "normal-form", "schwartz-zippel" or "sampling"
    max_abs: float = 0.0
    witness: dict | None = None

    @property
    def exact(self) -> bool:
        return self.status is ZeroStatus.PROVEN_ZERO and self.method != "sampling"

    @property
    def numerically_zero(self) -> bool:
        return self.status is ZeroStatus.PROVEN_ZERO or (
            self.status is ZeroStatus.UNDECIDED and self.max_abs < ZERO_TOL)


def zero_test(e, samples: int = 25, rng: random.Random | None = None,
              domain: Sequence = (), names: Sequence[str] | None = None,
              retries: int = 10) -> ZeroTest:
    """Three-valued zero test with the evidence that produced the verdict.

    A zero normal form is an exact proof. Otherwise the expression is sampled at
    random rational points (inside ``domain`` when given); poles are redrawn up
    to ``retries * samples`` times. A polynomial of total degree below the
    sample count that vanishes at every sample is certified zero
    (Schwartz-Zippel); anything else that looks zero stays undecided.
    """
    rng = rng if rng is not None else random.Random(0)
    e = normalize(e)
    if e == 0:
        return ZeroTest(ZeroStatus.PROVEN_ZERO, "normal-form")
    vars_ = sorted(free_names(e) | set(names or ()))
    max_abs = 0.0
    good = 0
    budget = retries * samples
    while good < samples and budget > 0:
        budget -= 1
        pt = sample_point(vars_, rng, domain) if vars_ else {}
        if pt is None:
            break
        try:
            v = abs(evaluate(e, pt))
        except EvaluationDomainError:
            continue
        good += 1
        if v > NONZERO_TOL:
            return ZeroTest(ZeroStatus.PROVEN_NONZERO, "sampling", v, pt)
        max_abs = max(max_abs, v)
    if good < samples:
        return ZeroTest(ZeroStatus.UNDECIDED, "sampling", max_abs)
    if max_abs < ZERO_TOL and is_polynomial(e) and total_degree(e) < samples:
        return ZeroTest(ZeroStatus.PROVEN_ZERO, "schwartz-zippel", max_abs)
    return ZeroTest(ZeroStatus.UNDECIDED, "sampling", max_abs)


def is_zero(e, samples: int = 25, rng: random.Random | None = None, domain: Sequence = ()) -> ZeroStatus:
    return zero_test(e, samples=samples, rng=rng, domain=domain).status


def matrix(rows) -> sp.Matrix:
    return sp.Matrix([[as_expr(v) for v in row] for row in rows])


def normalize_matrix(m: sp.Matrix) -> sp.Matrix:
    return m.applyfunc(normalize)


def inverse(m: sp.Matrix) -> sp.Matrix:
    """Exact inverse via the adjugate; fine for the small matrices used here."""
    if m.shape == (1, 1):
        return sp.Matrix([[normalize(1 / m[0, 0])]])
    det = normalize(m.det(method="berkowitz"))
    if det == 0:
        raise ZeroDivisionError("singular matrix")
    return normalize_matrix(m.adjugate(method="berkowitz") / det)


def singular_subterms(e) -> list[tuple[str, Expr]]:
    """Subexpressions that must not vanish for ``e`` to be smooth there.

    Returns (kind, expr) pairs: denominators, radicands of sqrt (and other
    fractional powers) and arguments of log.
    """
    e = normalize(e)
    found: list[tuple[str, Expr]] = []
    num, den = sp.fraction(e)
    if not den.is_Number:
        found.append(("denominator", den))
    for node in sp.preorder_traversal(e):
        if isinstance(node, sp.Pow) and node.exp.is_Rational and not node.exp.is_Integer:
            found.append(("radicand", node.base))
        elif isinstance(node, sp.Pow) and node.exp.is_Integer and node.exp < 0:
            found.append(("denominator", node.base))
        elif isinstance(node, sp.log):
            found.append(("log-argument", node.args[0]))
    unique: dict = {}
    for kind, sub in found:
        unique.setdefault((kind, sub), None)
    return list(unique)


_WITNESS_VALUES = (Fraction(1), Fraction(-1), Fraction(2), Fraction(1, 2), Fraction(-2), Fraction(-1, 2), Fraction(3))


def find_witness(e, names: Sequence[str], domain: Sequence = (), rng: random.Random | None = None,
                 threshold: float = NONZERO_TOL) -> dict[str, Fraction] | None:
    """A simple rational point (small integers first) where ``|e| > threshold``."""
    import itertools

    names = sorted(names)
    candidates = itertools.islice(itertools.product(_WITNESS_VALUES, repeat=len(names)), 400)
    rng = rng if rng is not None else random.Random(0)
    extra = (dict(zip(names, (random_rational(rng) for _ in names))) for _ in range(200))
    for pt in itertools.chain((dict(zip(names, c)) for c in candidates), extra):
        try:
            if domain and not all(evaluate(c, pt) > 0 for c in domain):
                continue
            if abs(evaluate(e, pt)) > threshold:
                return pt
        except EvaluationDomainError:
            continue
    return None
