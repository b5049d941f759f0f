"""Exception hierarchy. Every error carries a short machine-readable ``code``."""


class SingfolError(Exception):
    code = "error"

    def __init__(self, message: str = "", code: str | None = None):
        super().__init__(message or self.code)
        if code is not None:
            self.code = code


class UnknownVariableError(SingfolError):
    code = "unknown-variable"


class UnboundVariableError(SingfolError):
    code = "unbound-variable"


class EvaluationDomainError(SingfolError):
    code = "evaluation-domain"


class ChartMismatchError(SingfolError):
    code = "chart-mismatch"


class DimensionMismatchError(SingfolError):
    code = "dimension-mismatch"


class SingularJetError(SingfolError):
    code = "singular-jet"


class JetMismatchError(SingfolError):
    code = "jet-mismatch"


class OrderOverflowError(SingfolError):
    code = "order-overflow"


class OrthonormalizationAmbiguousError(SingfolError):
    code = "orthonormalization-ambiguous"


class PreconditionError(SingfolError):
    code = "precondition"


class SpecError(SingfolError):
    """Input document problem with a source location (1-based line and column)."""

    category = "error"

    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line, self.col = line, col
        self.detail = message
        loc = f"{line}:{col}: " if line else ""
        super().__init__(f"{loc}{self.category}: {message}")


class SpecSyntaxError(SpecError):
    code = "syntax"
    category = "syntax error"


class SpecSemanticError(SpecError):
    code = "semantic"
    category = "semantic error"


class DegreeMismatchError(SingfolError):
    code = "degree-mismatch"
