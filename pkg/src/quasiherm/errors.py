"""Exception hierarchy shared by every module."""


class QuasiHermitianError(Exception):
    """Base class for all library errors."""


class DomainError(QuasiHermitianError, ValueError):
    pass


class DimensionMismatch(QuasiHermitianError, ValueError):
    pass


class NotHermitian(QuasiHermitianError, ValueError):
    pass


class NotPositiveDefinite(QuasiHermitianError, ValueError):
    pass


class ComplexSpectrum(QuasiHermitianError, ValueError):
    pass


class DegenerateSpectrum(QuasiHermitianError, ValueError):
    pass


class DefectiveMatrix(QuasiHermitianError, ValueError):
    pass


class DegenerateObservable(QuasiHermitianError, ValueError):
    pass


class OutOfRange(QuasiHermitianError, ValueError):
    pass


class IncompatibleMetric(QuasiHermitianError, ValueError):
    """H(t) is not quasi-Hermitian with respect to the supplied metric."""


# expressions

class UnboundParameter(QuasiHermitianError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class EvaluationError(QuasiHermitianError, ArithmeticError):
    pass


class ExpressionSyntaxError(QuasiHermitianError):
    """Malformed expression; ``column`` is 1-based within the expression text."""

    def __init__(self, message, column):
        self.message = message
        self.column = column
        super().__init__(f"column {column}: {message}")


# evolution

class SingularOmega(QuasiHermitianError, ArithmeticError):
    pass


class NonHermitianPushforward(QuasiHermitianError, ArithmeticError):
    pass


class StepSizeUnderflow(QuasiHermitianError, ArithmeticError):
    pass


# scenario files and the runner

class ScenarioError(QuasiHermitianError):
    """A positioned diagnostic from the scenario-file parser."""

    def __init__(self, message, line=None, column=None):
        self.message = message
        self.line = line
        self.column = column
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        prefix = ", ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class ScenarioSyntaxError(ScenarioError):
    pass


class MissingSection(ScenarioError):
    pass


class ConflictingMetricModes(ScenarioError):
    pass


class UnsupportedFormat(QuasiHermitianError, ValueError):
    pass


class StageError(QuasiHermitianError):
    """Wraps a failure from the scenario pipeline with the stage that raised it."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
