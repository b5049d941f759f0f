"""Symbolic toolkit for regular and Haefliger-singular foliations: Gel'fand-Fuks cochains,
WO_q cohomology, characteristic forms and the Godbillon-Vey algorithm."""
from .errors import SingfolError, SpecError, SpecSemanticError, SpecSyntaxError
from .exterior import Chart, DiffForm, MatrixForm, parse_form
from .expr import normalize, zero_test
from .report import Report, Status
from .syntax import parse_expr, to_text

__all__ = [
    "Chart", "DiffForm", "MatrixForm", "Report", "SingfolError", "SpecError", "SpecSemanticError",
    "SpecSyntaxError", "Status", "normalize", "parse_expr", "parse_form", "to_text", "zero_test",
]
__version__ = "0.1.0"
