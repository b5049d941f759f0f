"""Command-line entry point: ``singfol <command> <file> [--seed N] [--samples N] [--format text|lines] [--grid N]``."""
from __future__ import annotations

import argparse
import random
import sys
from dataclasses import dataclass
from typing import Sequence

from . import chernweil as cw
from . import gelfandfuks as gf
from . import woq
from .dsl import SpecDocument, build_atlas, build_geometries, load
from .errors import SingfolError, SpecError
from .expr import sample_point
from .foliation import density_check, involutivity_check, singular_locus, verify_cocycle
from .geometry import adapted_check, is_bott, singular_points, torsion
from .report import Report, Status, format_point
from .syntax import to_text

DOCUMENT_COMMANDS = ("check-cocycle", "singular-set", "involutivity", "adapted-check", "chern-weil", "gv")
ALGEBRA_COMMANDS = ("wo-cohomology", "gf-verify")
COMMANDS = DOCUMENT_COMMANDS + ALGEBRA_COMMANDS


@dataclass(frozen=True)
class Options:
    seed: int = 0
    samples: int = 25
    grid: int = 11


# ---------------------------------------------------------------- commands

def _prefix(atlas, name: str) -> str:
    return f"{name}/" if len(atlas.charts) > 1 else ""


def cmd_check_cocycle(doc: SpecDocument, opts: Options, rng: random.Random) -> Report:
    return verify_cocycle(build_atlas(doc), opts.samples, rng)


def cmd_singular_set(doc: SpecDocument, opts: Options, rng: random.Random) -> Report:
    atlas = build_atlas(doc)
    report = density_check(atlas, resolution=opts.grid)
    locus = singular_locus(atlas)
    for fc in atlas.charts:
        for cols, m in zip(locus.columns[fc.name], locus.chart_minors(fc.name)):
            tag = ",".join(fc.coords[c] for c in cols)
            report.emit_form(f"minor[{fc.name}][{tag}]", to_text(m))
        pts = singular_points(fc, locus.chart_minors(fc.name))
        shown = "; ".join(format_point(p) for p in pts[:8]) or "none"
        report.check(f"singular-points[{fc.name}]", Status.PASS_EXACT, f"{len(pts)} found: {shown}")
    return report


def cmd_involutivity(doc: SpecDocument, opts: Options, rng: random.Random) -> Report:
    atlas = build_atlas(doc)
    report = Report()
    for fc in atlas.charts:
        points = []
        for _ in range(3):
            p = sample_point(fc.coords, rng, fc.domain)
            if p is not None:
                points.append(p)
        single = type(atlas)(atlas.n, atlas.q, (fc,), {}, atlas.name)
        report.extend(involutivity_check(single, points, samples=opts.samples, rng=rng))
    return report


def _geometry_reports(doc, opts, rng):
    atlas = build_atlas(doc)
    geoms = build_geometries(doc, atlas)
    return atlas, geoms


def cmd_adapted_check(doc: SpecDocument, opts: Options, rng: random.Random) -> Report:
    atlas, geoms = _geometry_reports(doc, opts, rng)
    report = density_check(atlas, resolution=opts.grid)
    report.extend(adapted_check(atlas, geoms, rng=rng))
    return report


def _singular(atlas, fc) -> bool:
    return bool(singular_points(fc, singular_locus(atlas).chart_minors(fc.name)))


def cmd_chern_weil(doc: SpecDocument, opts: Options, rng: random.Random) -> Report:
    atlas, geoms = _geometry_reports(doc, opts, rng)
    report = Report()
    per_chart = {}
    for fc in atlas.charts:
        pre = _prefix(atlas, fc.name)
        conn, eps = geoms[fc.name]
        data = cw.prepare(conn, eps, rng)
        report.extend(cw.chern_weil_report(data, opts.samples, rng), pre)
        try:
            report.extend(cw.bott_vanishing_check(conn, samples=opts.samples, rng=rng), pre)
        except SingfolError as exc:
            report.check(pre + "bott-vanishing", Status.UNDECIDED, f"not applicable: {exc}")
        forms = {x.text(): cw.lambda_element(x, data) for x in cw.generators(atlas.q)}
        per_chart[fc.name] = forms
        if _singular(atlas, fc):
            report.extend(cw.extension_report({f"lambda({k})": v for k, v in forms.items()}, atlas, fc.name,
                                              rng=rng), pre)
    if atlas.transitions:
        report.extend(cw.overlap_coherence(atlas, per_chart, opts.samples, rng))
    return report


def cmd_gv(doc: SpecDocument, opts: Options, rng: random.Random) -> Report:
    atlas, geoms = _geometry_reports(doc, opts, rng)
    report = Report()
    if not doc.oriented:
        report.check("gv-precondition", Status.FAIL, "document declares the normal bundle not transversely oriented")
        return report
    if atlas.transitions:
        report.extend(cw.orientation_check(atlas, rng=rng))
    adapted = adapted_check(atlas, geoms, rng=rng)
    if not adapted.all_passed:
        report.extend(adapted)
        report.check("gv-precondition", Status.FAIL, "geometry is not adapted")
        return report
    for fc in atlas.charts:
        pre = _prefix(atlas, fc.name)
        conn, eps = geoms[fc.name]
        checks = torsion(conn, opts.samples, rng)
        checks.extend(is_bott(conn, opts.samples, rng))
        if not checks.all_passed:
            report.extend(checks, pre)
            report.check(pre + "gv-precondition", Status.FAIL, "connection is not a torsion-free Bott connection")
            continue
        data = cw.prepare(conn, eps, rng)
        res = cw.gv_algorithm(data, opts.samples, rng)
        report.emit_form(pre + "omega", res.omega.to_text())
        report.emit_form(pre + "eta", res.eta.to_text())
        report.emit_form(pre + "gv", res.gv.to_text())
        report.extend(res.report, pre)
        if _singular(atlas, fc):
            forms = {"lambda(h1)": cw.lambda_h(1, data), "omega": res.omega, "eta": res.eta, "gv": res.gv}
            report.extend(cw.extension_report(forms, atlas, fc.name, rng=rng), pre)
    return report


def cmd_wo_cohomology(q: int, opts: Options) -> Report:
    report = Report()
    zero = all(woq.wo_differential(woq.wo_differential(woq.WOElement.monomial(m))).is_zero()
               for m in woq.monomials(q) if m.survives())
    report.check("d^2=0", Status.PASS_EXACT if zero else Status.FAIL, f"on all basis monomials of WO_{q}")
    for group in woq.wo_cohomology(q):
        detail = f"dim {group.betti}"
        if group.representatives:
            detail += " representative " + ", ".join(r.text() for r in group.representatives)
        report.check(f"H^{group.degree}", Status.PASS_EXACT, detail)
    return report


def cmd_gf_verify(q: int, opts: Options) -> Report:
    report = Report()
    for name, residual in gf.structure_equation_residuals(q):
        report.check(f"structure[{name}]", Status.PASS_EXACT if residual.is_zero() else Status.FAIL,
                     "residual zero" if residual.is_zero() else "residual " + gf.to_text(residual))
    cocycles = [(f"c{i}", gf.universal_c(i, q)) for i in range(1, q + 1)]
    for name, c in cocycles:
        dc = gf.ce_differential(c)
        report.check(f"d{name}=0", Status.PASS_EXACT if dc.is_zero() else Status.FAIL,
                     "exact rational arithmetic")
    h1 = gf.universal_h(1, q)
    res = gf.ce_differential(h1) - gf.universal_c(1, q)
    report.check("dh1=c1", Status.PASS_EXACT if res.is_zero() else Status.FAIL, "exact rational arithmetic")
    for name, c in cocycles + [("h1", h1)]:
        checks = gf.check_oq_basic(c)
        ok = all(b.passed for b in checks)
        report.check(f"O(q)-basic[{name}]", Status.PASS_EXACT if ok else Status.FAIL,
                     f"{len(checks)} contraction/Lie-derivative identities")
    return report


# ---------------------------------------------------------------- emission

def _detail(entry) -> str:
    detail = entry.detail
    if entry.witness:
        detail = (detail + "; " if detail else "") + "witness " + format_point(entry.witness)
    return detail


def emit(report: Report, fmt: str = "text") -> str:
    lines = []
    for e in report:
        if fmt == "lines":
            if e.is_form:
                lines.append(f"FORM {e.name} = {e.form}")
            else:
                lines.append(f"CHECK {e.name} {e.status.value} {_detail(e)}".rstrip())
        else:
            if e.is_form:
                lines.append(f"{e.name} = {e.form}")
            else:
                lines.append(f"{e.status.value:<13}{e.name} {_detail(e)}".rstrip())
    return "\n".join(lines) + ("\n" if lines else "")


def run(doc: SpecDocument | None, command: str, opts: Options = Options(), q: int | None = None) -> Report:
    """Execute one command; every random choice derives from ``opts.seed``."""
    rng = random.Random(opts.seed)
    if command == "wo-cohomology":
        return cmd_wo_cohomology(q, opts)
    if command == "gf-verify":
        return cmd_gf_verify(q, opts)
    handler = {
        "check-cocycle": cmd_check_cocycle, "singular-set": cmd_singular_set,
        "involutivity": cmd_involutivity, "adapted-check": cmd_adapted_check,
        "chern-weil": cmd_chern_weil, "gv": cmd_gv,
    }[command]
    try:
        return handler(doc, opts, rng)
    except SpecError:
        raise
    except SingfolError as exc:
        report = Report()
        report.check(f"{command}-precondition", Status.FAIL, f"{exc.code}: {exc}")
        return report


def _parse_q(arg: str | None) -> int:
    if arg is None or not arg.startswith("q="):
        raise SpecError("expected q=<k>")
    try:
        q = int(arg[2:])
    except ValueError:
        raise SpecError(f"bad value in {arg!r}") from None
    if not 1 <= q <= 3:
        raise SpecError("q must be 1, 2 or 3")
    return q


def main(argv: Sequence[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="singfol", description="Haefliger-singular foliation toolkit")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("target", nargs="?", help="document file, or q=<k> for algebraic commands")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--samples", type=int, default=25)
    parser.add_argument("--format", choices=("text", "lines"), default="text")
    parser.add_argument("--grid", type=int, default=11)
    args = parser.parse_args(argv)
    opts = Options(args.seed, args.samples, args.grid)
    try:
        if args.command in ALGEBRA_COMMANDS:
            report = run(None, args.command, opts, _parse_q(args.target))
        else:
            if args.target is None:
                parser.error(f"{args.command} needs a document file")
            try:
                doc = load(args.target)
            except OSError as exc:
                print(f"singfol: cannot read {args.target}: {exc.strerror}", file=sys.stderr)
                return 2
            report = run(doc, args.command, opts)
    except SpecError as exc:
        where = f"{args.target}:" if args.target and args.command in DOCUMENT_COMMANDS else ""
        print(f"singfol: {where}{exc}", file=sys.stderr)
        return 2
    sys.stdout.write(emit(report, args.format))
    return 1 if report.failures() else 0


if __name__ == "__main__":
    sys.exit(main())
