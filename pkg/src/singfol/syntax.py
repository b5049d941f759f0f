"""Surface syntax for expressions: tokenizer, recursive-descent parser, printer.

Grammar (``^`` binds tighter than ``*``, exponents must be integers)::

    expr  := term (('+' | '-') term)*
    term  := unary (('*' | '/' | <juxtaposition>) unary)*
    unary := ('-' | '+') unary | power
    power := atom ('^' unary)?
    atom  := NUMBER | IDENT | FUNC '(' expr ')' | '(' expr ')'

Juxtaposition (``2*w dx``) is only accepted when the caller asks for it; the
form syntax uses it. Parsing yields a small positioned AST so that callers can
resolve identifiers (coordinates, ``d<coord>`` differentials) with accurate
diagnostics.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import sympy as sp

from .errors import SpecSemanticError, SpecSyntaxError
from .expr import FUNCTIONS, normalize

_TOKEN = re.compile(r"\s*(?:(?P<num>\d+)|(?P<id>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^(),]))")


@dataclass(frozen=True)
class Token:
    kind: str  # "num", "id", "op", "end"
    text: str
    line: int
    col: int


def tokenize(text: str, line: int = 1, col0: int = 1) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            bad = len(text) - len(text[pos:].lstrip())
            raise SpecSyntaxError(f"unexpected character {text[bad]!r}", line, col0 + bad)
        kind = m.lastgroup
        tokens.append(Token(kind, m.group(kind), line, col0 + m.start(kind)))
        pos = m.end()
    tokens.append(Token("end", "", line, col0 + len(text)))
    return tokens


# AST: tuples whose second field is the source Token (for diagnostics).
#   ("num", tok, Fraction) ("var", tok, name) ("neg", tok, a) ("add"|"sub"|"mul"|"div", tok, a, b)
#   ("pow", tok, a, int) ("call", tok, fname, a)


class Parser:
    def __init__(self, tokens: Sequence[Token], juxtapose: bool = False):
        self.toks = list(tokens)
        self.i = 0
        self.juxtapose = juxtapose

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def advance(self) -> Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        t = self.tok
        if t.text != text or t.kind == "end":
            found = "end of input" if t.kind == "end" else repr(t.text)
            raise SpecSyntaxError(f"expected {text!r}, found {found}", t.line, t.col)
        return self.advance()

    def parse_all(self):
        node = self.expr()
        if self.tok.kind != "end":
            raise SpecSyntaxError(f"unexpected {self.tok.text!r}", self.tok.line, self.tok.col)
        return node

    def expr(self):
        node = self.term()
        while self.tok.text in ("+", "-") and self.tok.kind == "op":
            op = self.advance()
            rhs = self.term()
            node = ("add" if op.text == "+" else "sub", op, node, rhs)
        return node

    def _starts_atom(self) -> bool:
        t = self.tok
        return t.kind in ("num", "id") or t.text == "("

    def term(self):
        node = self.unary()
        while True:
            if self.tok.kind == "op" and self.tok.text in ("*", "/"):
                op = self.advance()
                rhs = self.unary()
                node = ("mul" if op.text == "*" else "div", op, node, rhs)
            elif self.juxtapose and self._starts_atom():
                op = self.tok
                node = ("mul", op, node, self.unary())
            else:
                return node

    def unary(self):
        if self.tok.kind == "op" and self.tok.text in ("-", "+"):
            op = self.advance()
            inner = self.unary()
            return ("neg", op, inner) if op.text == "-" else inner
        return self.power()

    def power(self):
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            op = self.advance()
            exp_tok = self.tok
            exponent = self.unary()
            value = constant_value(exponent)
            if value is None or value.denominator != 1:
                raise SpecSyntaxError("exponent must be an integer constant", exp_tok.line, exp_tok.col)
            return ("pow", op, base, int(value))
        return base

    def atom(self):
        t = self.tok
        if t.kind == "num":
            self.advance()
            return ("num", t, Fraction(int(t.text)))
        if t.kind == "id":
            self.advance()
            if t.text in FUNCTIONS and self.tok.text == "(":
                self.advance()
                arg = self.expr()
                self.expect(")")
                return ("call", t, t.text, arg)
            return ("var", t, t.text)
        if t.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if t.kind == "end" else repr(t.text)
        raise SpecSyntaxError(f"expected an expression, found {found}", t.line, t.col)


def constant_value(node) -> Fraction | None:
    """Value of a constant subtree (numbers combined by arithmetic), else None."""
    kind = node[0]
    if kind == "num":
        return node[2]
    if kind == "neg":
        v = constant_value(node[2])
        return None if v is None else -v
    if kind in ("add", "sub", "mul", "div"):
        a, b = constant_value(node[2]), constant_value(node[3])
        if a is None or b is None:
            return None
        if kind == "div":
            return None if b == 0 else a / b
        return {"add": a + b, "sub": a - b, "mul": a * b}[kind]
    if kind == "pow":
        a = constant_value(node[2])
        if a is None or (a == 0 and node[3] < 0):
            return None
        return a ** node[3]
    return None


def parse_ast(text: str, line: int = 1, col: int = 1, juxtapose: bool = False):
    return Parser(tokenize(text, line, col), juxtapose).parse_all()


def fold(node, leaf: Callable, ops) -> object:
    """Evaluate an AST bottom-up. ``leaf(kind, tok, payload)`` handles num/var;
    ``ops`` supplies add, sub, mul, div, neg, pow(a, n), call(name, a)."""
    kind, tok = node[0], node[1]
    if kind in ("num", "var"):
        return leaf(kind, tok, node[2])
    if kind == "neg":
        return ops.neg(fold(node[2], leaf, ops))
    if kind == "pow":
        return ops.pow(fold(node[2], leaf, ops), node[3], tok)
    if kind == "call":
        return ops.call(node[2], fold(node[3], leaf, ops), tok)
    a, b = fold(node[2], leaf, ops), fold(node[3], leaf, ops)
    return getattr(ops, kind)(a, b, tok)


class _ScalarOps:
    @staticmethod
    def neg(a):
        return -a

    @staticmethod
    def add(a, b, tok):
        return a + b

    @staticmethod
    def sub(a, b, tok):
        return a - b

    @staticmethod
    def mul(a, b, tok):
        return a * b

    @staticmethod
    def div(a, b, tok):
        if b == 0:
            raise SpecSemanticError("division by zero", tok.line, tok.col)
        return a / b

    @staticmethod
    def pow(a, n, tok):
        if a == 0 and n < 0:
            raise SpecSemanticError("division by zero", tok.line, tok.col)
        return a ** n

    @staticmethod
    def call(name, a, tok):
        return FUNCTIONS[name](a)


def scalar_leaf(allowed: Sequence[str] | None):
    def leaf(kind, tok, payload):
        if kind == "num":
            return sp.Rational(payload.numerator, payload.denominator)
        if allowed is not None and payload not in allowed:
            raise SpecSemanticError(f"unknown identifier {payload!r}", tok.line, tok.col)
        return sp.Symbol(payload)
    return leaf


def ast_to_expr(node, allowed: Sequence[str] | None = None) -> sp.Expr:
    return normalize(fold(node, scalar_leaf(allowed), _ScalarOps))


def parse_expr(text: str, allowed: Sequence[str] | None = None, line: int = 1, col: int = 1) -> sp.Expr:
    """Parse ``text`` to a normalized expression; ``allowed`` restricts identifiers."""
    return ast_to_expr(parse_ast(text, line, col), allowed)


# ---------------------------------------------------------------- printing

def _needs_parens_in_product(e: sp.Expr) -> bool:
    return isinstance(e, sp.Add) or (e.is_Rational and not e.is_Integer) or (e.is_Number and e < 0)


def _print_factor(e: sp.Expr) -> str:
    s = to_text(e)
    return f"({s})" if _needs_parens_in_product(e) else s


def _print_base(e: sp.Expr) -> str:
    s = to_text(e)
    if e.is_Symbol or isinstance(e, sp.Function) or (e.is_Integer and e >= 0):
        return s
    return f"({s})"


def _print_pow(base: sp.Expr, exp: sp.Rational) -> str:
    if exp.is_Integer:
        n = int(exp)
        return f"{_print_base(base)}^{n}" if n > 0 else f"{_print_base(base)}^({n})"
    # fractional exponents p/2^k arise only from nested square roots
    num, den = int(exp.p), int(exp.q)
    inner = to_text(base)
    while den > 1:
        if den % 2:
            raise ValueError(f"exponent {exp} is outside the printable fragment")
        inner = f"sqrt({inner})"
        den //= 2
    if num == 1:
        return inner
    return f"{inner}^{num}" if num > 0 else f"{inner}^({num})"


def to_text(e) -> str:
    """Print ``e`` in the surface syntax; ``parse_expr`` inverts it on normal forms."""
    e = sp.sympify(e)
    if e.is_Integer:
        return str(int(e))
    if e.is_Rational:
        return f"{e.p}/{e.q}"
    if e.is_Symbol:
        return e.name
    if e is sp.E:
        return "exp(1)"
    if isinstance(e, sp.Add):
        parts = []
        for term in e.as_ordered_terms():
            coeff, rest = term.as_coeff_Mul()
            if coeff.is_Number and coeff < 0:
                body = to_text(-term)
                if isinstance(-term, sp.Add):
                    body = f"({body})"
                parts.append(("-", body))
            else:
                parts.append(("+", to_text(term)))
        out = parts[0][1] if parts[0][0] == "+" else f"-{parts[0][1]}"
        for sign, body in parts[1:]:
            out += f" {sign} {body}"
        return out
    if isinstance(e, sp.Mul):
        coeff, rest = e.as_coeff_Mul()
        factors = sp.Mul.make_args(rest)
        den = [f.base ** -f.exp for f in factors if isinstance(f, sp.Pow) and f.exp.is_Rational and f.exp < 0]
        if den:
            num = [f for f in factors if not (isinstance(f, sp.Pow) and f.exp.is_Rational and f.exp < 0)]
            top = sp.Mul(sp.Integer(coeff.p), *num)
            top_s = f"({to_text(top)})" if isinstance(top, sp.Add) else to_text(top)
            bottom = ([str(coeff.q)] if coeff.q != 1 else []) + [_print_factor(f) for f in den]
            bottom_s = bottom[0] if len(bottom) == 1 else "(" + "*".join(bottom) + ")"
            return f"{top_s}/{bottom_s}"
        body = "*".join(_print_factor(f) for f in factors)
        if coeff == 1:
            return body
        if coeff == -1:
            return f"-{body}"
        if coeff.is_Rational and coeff < 0:
            return f"-{to_text(-coeff)}*{body}"
        return f"{to_text(coeff)}*{body}"
    if isinstance(e, sp.Pow):
        if not e.exp.is_Rational:
            raise ValueError(f"non-rational exponent in {e}")
        return _print_pow(e.base, e.exp)
    if isinstance(e, sp.Function):
        name = type(e).__name__
        if name in FUNCTIONS:
            return f"{name}({to_text(e.args[0])})"
    raise ValueError(f"cannot print {e!r} in the expression syntax")
