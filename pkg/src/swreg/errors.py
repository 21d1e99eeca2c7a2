"""Exception and warning classes.

Validation errors (bad input, violated preconditions) subclass ``ValueError``;
numeric failures (degenerate data, divergence) subclass ``ArithmeticError``.
The CLI maps the first family to exit code 1 and the second to exit code 2.
"""


class SwregError(Exception):
    """Base class for all package errors."""


class ValidationError(SwregError, ValueError):
    pass


class NumericError(SwregError, ArithmeticError):
    pass


class ParseError(ValidationError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SchemaError(ValidationError):
    pass


class UnsupportedDimensionError(ValidationError):
    pass


class GridError(ValidationError):
    pass


class MonotonicityError(ValidationError):
    pass


class ResolutionError(ValidationError):
    pass


class CutoffTooLargeError(ValidationError):
    pass


class ArgumentError(ValidationError):
    pass


class DegenerateSampleError(NumericError):
    pass


class EmptyMassError(NumericError):
    pass


class RankDeficiencyError(NumericError):
    def __init__(self, message, dimension=None):
        self.dimension = dimension
        super().__init__(message)


class BandwidthTooSmallError(NumericError):
    pass


class DegenerateWeightsError(NumericError):
    pass


class DegenerateVarianceError(NumericError):
    pass


class StepSizeError(NumericError):
    pass


class ExtrapolationWarning(UserWarning):
    pass


class FoldSkipWarning(UserWarning):
    pass
