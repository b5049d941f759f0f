"""Line-oriented foliation description documents.

::

    manifold M dim=3
    codim 1
    chart U coords=(x,y,z) domain=(1-x^2) map=(z*exp(-x))
    transition V U vars=(s) map=(2*s+1)
    metric [[1,0,0],[0,1,0],[0,0,1]]
    euclid [[1]]
    connection [[2*w dx]]
    frame [[1]]
    geometry pullback map=(u, v, u*v) of target.fol
    geometry graph
    oriented no

Blocks ``metric``, ``euclid``, ``connection`` and ``frame`` may name a chart
right after the keyword; otherwise they apply to every chart. ``euclid`` is
given in the Haefliger frame; ``connection`` in the frame of ``frame``.
"""
from __future__ import annotations

import os
import random
import re
from dataclasses import dataclass, field
from typing import Mapping

import sympy as sp

from .errors import SpecSemanticError, SpecSyntaxError
from .exterior import Chart, MatrixForm, parse_form
from .foliation import Atlas, FoliatedChart, Transition, graph_foliation, pullback_foliation
from .geometry import (Connection, Metric, bott_levi_civita, gauge, induced_euclid,
                       positive_definite_at_samples, pullback_geometry)
from .syntax import parse_expr

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


@dataclass
class Located:
    text: str
    line: int
    col: int


@dataclass
class ChartDecl:
    name: str
    coords: tuple[str, ...]
    domain: tuple[sp.Expr, ...] = ()
    fmap: tuple[sp.Expr, ...] | None = None
    line: int = 0


@dataclass
class TransitionDecl:
    target: str
    source: str
    variables: tuple[str, ...]
    hmap: tuple[sp.Expr, ...]
    domain: tuple[sp.Expr, ...] = ()
    coord_map: tuple[sp.Expr, ...] | None = None
    line: int = 0


@dataclass
class SpecDocument:
    name: str = "M"
    n: int | None = None
    q: int | None = None
    charts: list[ChartDecl] = field(default_factory=list)
    transitions: list[TransitionDecl] = field(default_factory=list)
    metric: dict[str | None, sp.Matrix] = field(default_factory=dict)
    euclid: dict[str | None, sp.Matrix] = field(default_factory=dict)
    connection: dict[str | None, MatrixForm] = field(default_factory=dict)
    frame: dict[str | None, sp.Matrix] = field(default_factory=dict)
    geometry: tuple | None = None  # ("pullback", phi, path, target) | ("graph",)
    oriented: bool = True
    path: str | None = None

    def chart(self, name: str) -> ChartDecl:
        for c in self.charts:
            if c.name == name:
                return c
        raise KeyError(name)

    @staticmethod
    def pick(block: Mapping, chart: str):
        return block.get(chart, block.get(None))


# ---------------------------------------------------------------- scanning

class _Line:
    """Cursor over one source line with 1-based columns."""

    def __init__(self, text: str, line: int):
        self.text, self.line, self.pos = text, line, 0

    @property
    def col(self) -> int:
        return self.pos + 1

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos] in " \t":
            self.pos += 1

    def at_end(self) -> bool:
        self.skip_ws()
        return self.pos >= len(self.text)

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def word(self, what: str = "a name") -> Located:
        self.skip_ws()
        m = re.compile(r"[^\s=()\[\],]+").match(self.text, self.pos)
        if not m:
            raise SpecSyntaxError(f"expected {what}", self.line, self.col)
        loc = Located(m.group(0), self.line, self.col)
        self.pos = m.end()
        return loc

    def ident(self, what: str = "a name") -> Located:
        loc = self.word(what)
        if not _IDENT.fullmatch(loc.text):
            raise SpecSyntaxError(f"expected {what}, found {loc.text!r}", loc.line, loc.col)
        return loc

    def expect(self, ch: str):
        self.skip_ws()
        if not self.text.startswith(ch, self.pos):
            found = self.text[self.pos] if self.pos < len(self.text) else "end of line"
            raise SpecSyntaxError(f"expected {ch!r}, found {found!r}", self.line, self.col)
        self.pos += len(ch)

    def group(self, open_: str, close: str) -> list[Located]:
        """Comma-separated items inside balanced brackets; items keep their columns."""
        self.expect(open_)
        items, depth, start = [], 0, self.pos
        while True:
            if self.pos >= len(self.text):
                raise SpecSyntaxError(f"missing {close!r}", self.line, self.col)
            ch = self.text[self.pos]
            if ch in "([":
                depth += 1
            elif ch in ")]":
                if depth == 0:
                    if ch != close:
                        raise SpecSyntaxError(f"expected {close!r}, found {ch!r}", self.line, self.col)
                    items.append(self._item(start, self.pos))
                    self.pos += 1
                    break
                depth -= 1
            elif ch == "," and depth == 0:
                items.append(self._item(start, self.pos))
                start = self.pos + 1
            self.pos += 1
        if len(items) == 1 and not items[0].text:
            return []
        for it in items:
            if not it.text:
                raise SpecSyntaxError("empty item", it.line, it.col)
        return items

    def _item(self, a: int, b: int) -> Located:
        raw = self.text[a:b]
        lead = len(raw) - len(raw.lstrip())
        return Located(raw.strip(), self.line, a + lead + 1)

    def matrix(self) -> list[list[Located]]:
        self.expect("[")
        rows = []
        while True:
            self.skip_ws()
            rows.append(self.group("[", "]"))
            self.skip_ws()
            if self.peek() == ",":
                self.pos += 1
                continue
            self.expect("]")
            return rows

    def keyvals(self) -> dict[str, tuple[Located, object]]:
        out = {}
        while not self.at_end():
            key = self.ident("a key")
            self.expect("=")
            if self.peek() == "(":
                val = self.group("(", ")")
            else:
                val = self.word("a value")
            if key.text in out:
                raise SpecSyntaxError(f"duplicate key {key.text!r}", key.line, key.col)
            out[key.text] = (key, val)
        return out


def _strip_comment(line: str) -> str:
    i = line.find("#")
    return line if i < 0 else line[:i]


def _int_value(loc: Located, what: str) -> int:
    if not re.fullmatch(r"\d+", loc.text):
        raise SpecSyntaxError(f"{what} must be a non-negative integer", loc.line, loc.col)
    return int(loc.text)


def _exprs(items: list[Located], allowed) -> tuple[sp.Expr, ...]:
    return tuple(parse_expr(it.text, allowed, it.line, it.col) for it in items)


def _need(kv: dict, key: str, stmt: Located):
    if key not in kv:
        raise SpecSyntaxError(f"{stmt.text} needs {key}=(...)", stmt.line, stmt.col)
    return kv[key]


def _only(kv: dict, allowed: set[str]):
    for k, (loc, _) in kv.items():
        if k not in allowed:
            raise SpecSyntaxError(f"unknown key {k!r}", loc.line, loc.col)


def _tuple(val, key: Located) -> list[Located]:
    if isinstance(val, Located):
        raise SpecSyntaxError(f"{key.text} expects a parenthesized list", val.line, val.col)
    return val


# ---------------------------------------------------------------- parsing

def parse_spec(text: str, path: str | None = None) -> SpecDocument:
    """Parse a document; errors carry 1-based line and column."""
    doc = SpecDocument(path=path)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = _strip_comment(raw)
        if not body.strip():
            continue
        cur = _Line(body, lineno)
        kw = cur.ident("a statement keyword")
        handler = _STATEMENTS.get(kw.text)
        if handler is None:
            raise SpecSyntaxError(f"unknown statement {kw.text!r}", kw.line, kw.col)
        handler(doc, cur, kw)
    _finish(doc)
    return doc


def _manifold(doc: SpecDocument, cur: _Line, kw: Located):
    name = cur.ident("a manifold name")
    kv = cur.keyvals()
    _only(kv, {"dim"})
    key, val = _need(kv, "dim", kw)
    if doc.n is not None:
        raise SpecSemanticError("manifold declared twice", kw.line, kw.col)
    doc.name, doc.n = name.text, _int_value(val, "dim")
    if doc.n < 1:
        raise SpecSemanticError("dimension must be positive", val.line, val.col)


def _codim(doc: SpecDocument, cur: _Line, kw: Located):
    val = cur.word("a codimension")
    if not cur.at_end():
        raise SpecSyntaxError("unexpected text after codimension", cur.line, cur.col)
    doc.q = _int_value(val, "codim")
    if doc.q < 1:
        raise SpecSemanticError("codimension must be positive", val.line, val.col)
    if doc.n is not None and doc.q > doc.n:
        raise SpecSemanticError(f"codimension {doc.q} exceeds dimension {doc.n}", val.line, val.col)


def _require_header(doc: SpecDocument, kw: Located):
    if doc.n is None:
        raise SpecSemanticError("'manifold' must come first", kw.line, kw.col)
    if doc.q is None and kw.text != "chart":
        raise SpecSemanticError("'codim' must be declared before this statement", kw.line, kw.col)


def _chart(doc: SpecDocument, cur: _Line, kw: Located):
    _require_header(doc, kw)
    name = cur.ident("a chart name")
    if any(c.name == name.text for c in doc.charts):
        raise SpecSemanticError(f"chart {name.text!r} declared twice", name.line, name.col)
    kv = cur.keyvals()
    _only(kv, {"coords", "domain", "map"})
    key, val = _need(kv, "coords", kw)
    coords = _tuple(val, key)
    for c in coords:
        if not _IDENT.fullmatch(c.text):
            raise SpecSyntaxError(f"bad coordinate name {c.text!r}", c.line, c.col)
    names = tuple(c.text for c in coords)
    if len(set(names)) != len(names):
        raise SpecSemanticError("repeated coordinate name", key.line, key.col)
    if len(names) != doc.n:
        raise SpecSemanticError(f"chart {name.text} has {len(names)} coordinates, manifold dimension is {doc.n}",
                                key.line, key.col)
    domain = _exprs(_tuple(kv["domain"][1], kv["domain"][0]), names) if "domain" in kv else ()
    fmap = None
    if "map" in kv:
        mkey, mval = kv["map"]
        items = _tuple(mval, mkey)
        if doc.q is None:
            raise SpecSemanticError("'codim' must be declared before a chart map", mkey.line, mkey.col)
        if len(items) != doc.q:
            raise SpecSemanticError(f"chart map has {len(items)} components, codimension is {doc.q}",
                                    mkey.line, mkey.col)
        fmap = _exprs(items, names)
    doc.charts.append(ChartDecl(name.text, names, domain, fmap, kw.line))


def _chart_ref(doc: SpecDocument, loc: Located) -> ChartDecl:
    try:
        return doc.chart(loc.text)
    except KeyError:
        raise SpecSemanticError(f"unknown chart {loc.text!r}", loc.line, loc.col) from None


def _transition(doc: SpecDocument, cur: _Line, kw: Located):
    _require_header(doc, kw)
    a, b = cur.ident("a target chart"), cur.ident("a source chart")
    ca, cb = _chart_ref(doc, a), _chart_ref(doc, b)
    kv = cur.keyvals()
    _only(kv, {"vars", "map", "domain", "coords"})
    vkey, vval = _need(kv, "vars", kw)
    variables = tuple(v.text for v in _tuple(vval, vkey))
    for v in _tuple(vval, vkey):
        if not _IDENT.fullmatch(v.text):
            raise SpecSyntaxError(f"bad variable name {v.text!r}", v.line, v.col)
    if len(variables) != doc.q:
        raise SpecSemanticError(f"transition needs {doc.q} variable(s), got {len(variables)}", vkey.line, vkey.col)
    mkey, mval = _need(kv, "map", kw)
    items = _tuple(mval, mkey)
    if len(items) != doc.q:
        raise SpecSemanticError(f"transition map has {len(items)} components, codimension is {doc.q}",
                                mkey.line, mkey.col)
    hmap = _exprs(items, variables)
    domain = _exprs(_tuple(kv["domain"][1], kv["domain"][0]), variables) if "domain" in kv else ()
    coord_map = None
    if "coords" in kv:
        ckey, cval = kv["coords"]
        items = _tuple(cval, ckey)
        if len(items) != doc.n:
            raise SpecSemanticError(f"coordinate change needs {doc.n} components", ckey.line, ckey.col)
        coord_map = _exprs(items, cb.coords)
    elif ca.coords != cb.coords:
        raise SpecSemanticError(f"charts {a.text} and {b.text} use different coordinates; give coords=(...)",
                                kw.line, kw.col)
    doc.transitions.append(TransitionDecl(a.text, b.text, variables, hmap, domain, coord_map, kw.line))


def _scope(doc: SpecDocument, cur: _Line) -> ChartDecl | None:
    if cur.peek() == "[":
        return None
    return _chart_ref(doc, cur.ident("a chart name or '['"))


def _block_charts(doc: SpecDocument, scope: ChartDecl | None, kw: Located) -> list[ChartDecl]:
    if scope is not None:
        return [scope]
    if not doc.charts:
        raise SpecSemanticError(f"'{kw.text}' needs a chart declared before it", kw.line, kw.col)
    return doc.charts


def _expr_matrix(doc, cur, kw, size_of) -> tuple[ChartDecl | None, list[list[Located]]]:
    _require_header(doc, kw)
    scope = _scope(doc, cur)
    start = (cur.line, cur.col)
    rows = cur.matrix()
    if not cur.at_end():
        raise SpecSyntaxError("unexpected text after matrix", cur.line, cur.col)
    size = size_of(doc)
    if len(rows) != size or any(len(r) != size for r in rows):
        raise SpecSemanticError(f"'{kw.text}' must be a {size}x{size} matrix", *start)
    return scope, rows


def _store_matrix(block: dict, scope, doc, kw, rows, symmetric: bool):
    for ch in _block_charts(doc, scope, kw):
        m = sp.Matrix([[parse_expr(it.text, ch.coords, it.line, it.col) for it in r] for r in rows])
        if symmetric and any(sp.simplify(m[i, j] - m[j, i]) != 0 for i in range(m.rows) for j in range(i)):
            raise SpecSemanticError(f"'{kw.text}' is not symmetric", kw.line, kw.col)
        if symmetric and not positive_definite_at_samples(m, ch.coords, 8, random.Random(0), ch.domain):
            raise SpecSemanticError(f"'{kw.text}' is not positive definite at sampled points", kw.line, kw.col)
        block[scope.name if scope else ch.name] = m


def _metric(doc, cur, kw):
    scope, rows = _expr_matrix(doc, cur, kw, lambda d: d.n)
    _store_matrix(doc.metric, scope, doc, kw, rows, True)


def _euclid(doc, cur, kw):
    scope, rows = _expr_matrix(doc, cur, kw, lambda d: d.q)
    _store_matrix(doc.euclid, scope, doc, kw, rows, True)


def _frame(doc, cur, kw):
    scope, rows = _expr_matrix(doc, cur, kw, lambda d: d.q)
    for ch in _block_charts(doc, scope, kw):
        m = sp.Matrix([[parse_expr(it.text, ch.coords, it.line, it.col) for it in r] for r in rows])
        if m.det() == 0:
            raise SpecSemanticError("frame matrix is singular", kw.line, kw.col)
        doc.frame[ch.name] = m


def _connection(doc, cur, kw):
    scope, rows = _expr_matrix(doc, cur, kw, lambda d: d.q)
    for ch in _block_charts(doc, scope, kw):
        chart = Chart(ch.name, ch.coords)
        doc.connection[ch.name] = MatrixForm([[parse_form(it.text, chart, 1, it.line, it.col) for it in r]
                                              for r in rows])


def _geometry(doc: SpecDocument, cur: _Line, kw: Located):
    _require_header(doc, kw)
    if doc.geometry is not None:
        raise SpecSemanticError("geometry declared twice", kw.line, kw.col)
    kind = cur.ident("'pullback' or 'graph'")
    if kind.text == "graph":
        if not cur.at_end():
            raise SpecSyntaxError("unexpected text after 'geometry graph'", cur.line, cur.col)
        doc.geometry = ("graph",)
        return
    if kind.text != "pullback":
        raise SpecSyntaxError(f"unknown geometry source {kind.text!r}", kind.line, kind.col)
    mkey = cur.ident("map")
    if mkey.text != "map":
        raise SpecSyntaxError("expected map=(...)", mkey.line, mkey.col)
    cur.expect("=")
    items = cur.group("(", ")")
    of = cur.ident("'of'")
    if of.text != "of":
        raise SpecSyntaxError("expected 'of <file>'", of.line, of.col)
    target = cur.word("a file name")
    if not cur.at_end():
        raise SpecSyntaxError("unexpected text after file name", cur.line, cur.col)
    if len(doc.charts) != 1:
        raise SpecSemanticError("a pullback document declares exactly one source chart before 'geometry'",
                                kw.line, kw.col)
    base = os.path.dirname(doc.path) if doc.path else "."
    tpath = os.path.join(base, target.text)
    try:
        with open(tpath, encoding="utf-8") as fh:
            tdoc = parse_spec(fh.read(), tpath)
    except OSError:
        raise SpecSemanticError(f"cannot read {target.text!r}", target.line, target.col) from None
    if tdoc.q != doc.q:
        raise SpecSemanticError(f"target codimension {tdoc.q} differs from {doc.q}", target.line, target.col)
    if len(items) != tdoc.n:
        raise SpecSemanticError(f"map has {len(items)} components, target dimension is {tdoc.n}",
                                items[0].line if items else kw.line, items[0].col if items else kw.col)
    phi = _exprs(items, doc.charts[0].coords)
    doc.geometry = ("pullback", phi, tpath, tdoc)


def _oriented(doc: SpecDocument, cur: _Line, kw: Located):
    val = cur.word("yes or no")
    if val.text not in ("yes", "no"):
        raise SpecSyntaxError("expected yes or no", val.line, val.col)
    doc.oriented = val.text == "yes"


_STATEMENTS = {
    "manifold": _manifold, "codim": _codim, "chart": _chart, "transition": _transition,
    "metric": _metric, "euclid": _euclid, "connection": _connection, "frame": _frame,
    "geometry": _geometry, "oriented": _oriented,
}


def _finish(doc: SpecDocument):
    if doc.n is None:
        raise SpecSemanticError("missing 'manifold' statement", 1, 1)
    if doc.q is None:
        raise SpecSemanticError("missing 'codim' statement", 1, 1)
    if not doc.charts:
        raise SpecSemanticError("no chart declared", 1, 1)
    pulled = doc.geometry is not None and doc.geometry[0] == "pullback"
    for c in doc.charts:
        if c.fmap is None and not pulled:
            raise SpecSemanticError(f"chart {c.name} has no map=(...)", c.line, 1)
        if c.fmap is not None and pulled:
            raise SpecSemanticError("a pullback document takes its chart maps from the target", c.line, 1)


# ---------------------------------------------------------------- building

def build_atlas(doc: SpecDocument) -> Atlas:
    if doc.geometry is not None and doc.geometry[0] == "pullback":
        _, phi, _, tdoc = doc.geometry
        src = doc.charts[0]
        return pullback_foliation(build_atlas(tdoc), phi, Chart(src.name, src.coords))
    charts = tuple(FoliatedChart(Chart(c.name, c.coords), c.fmap, c.domain) for c in doc.charts)
    transitions = {(t.target, t.source): Transition(t.source, t.target, t.variables, t.hmap, t.domain, t.coord_map)
                   for t in doc.transitions}
    return Atlas(doc.n, doc.q, charts, transitions, doc.name)


Geometries = dict[str, tuple[Connection, sp.Matrix]]


def build_geometries(doc: SpecDocument, atlas: Atlas | None = None) -> Geometries:
    """Per-chart (connection, Haefliger-frame Euclidean structure)."""
    atlas = atlas if atlas is not None else build_atlas(doc)
    if doc.geometry is not None and doc.geometry[0] == "pullback":
        _, phi, _, tdoc = doc.geometry
        target = build_geometries(tdoc)
        src = doc.charts[0]
        source = Chart(src.name, src.coords)
        return {name: pullback_geometry(phi, source, conn, eps) for name, (conn, eps) in target.items()}
    if doc.geometry is not None and doc.geometry[0] == "graph":
        G, emb = graph_foliation(atlas)
        out = {}
        for fc, gc in zip(atlas.charts, G.charts):
            conn = bott_levi_civita(Metric.euclidean(gc.chart), gc)
            eps = induced_euclid(gc.fmap, gc.chart)
            out[fc.name] = pullback_geometry(emb[fc.name], fc.chart, conn, eps)
        return out
    out = {}
    for fc in atlas.charts:
        g = doc.pick(doc.metric, fc.name)
        metric = Metric(fc.chart, g) if g is not None else Metric.euclidean(fc.chart)
        theta = doc.pick(doc.connection, fc.name)
        if theta is not None:
            frame = doc.pick(doc.frame, fc.name)
            conn = Connection(fc.chart, fc.fmap, theta, frame if frame is not None else sp.eye(atlas.q))
        else:
            conn = bott_levi_civita(metric, fc)
            frame = doc.pick(doc.frame, fc.name)
            if frame is not None:
                conn = gauge(conn, frame)
        eps = doc.pick(doc.euclid, fc.name)
        if eps is None:
            eps = induced_euclid(fc.fmap, fc.chart, metric.g)
        out[fc.name] = (conn, eps)
    return out


def load(path: str) -> SpecDocument:
    with open(path, encoding="utf-8") as fh:
        return parse_spec(fh.read(), path)


__all__ = ["SpecDocument", "ChartDecl", "TransitionDecl", "parse_spec", "build_atlas", "build_geometries",
           "load"]
