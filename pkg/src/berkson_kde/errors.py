"""Exception hierarchy.

Errors split into two families so the CLI can map them onto exit codes:
``ConfigError`` (bad input, exit 1) and ``NumericalError`` (a well-formed
request the numerics cannot satisfy, exit 2).
"""


class BerksonError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(BerksonError, ValueError):
    """Invalid user input: shapes, domains, files, configuration."""


class NumericalError(BerksonError, ArithmeticError):
    """A numerical procedure could not produce a finite answer."""


class ShapeError(ConfigError):
    pass


class InvalidCovarianceError(ConfigError):
    pass


class DomainError(ConfigError):
    pass


class EmptySampleError(ConfigError):
    pass


class UnsupportedDimensionError(ConfigError):
    pass


class CsvParseError(ConfigError):
    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class RecordRejectedError(ConfigError):
    def __init__(self, message, row=None):
        super().__init__(message if row is None else f"row {row}: {message}")
        self.row = row


class DegenerateModelError(NumericalError):
    """Smoothing plus error covariance is singular, so the MISE is infinite."""


class DivergenceError(NumericalError):
    """A spectral integral does not converge (e.g. zero error variance)."""


class BracketExhaustedError(NumericalError):
    pass


class ConditioningError(NumericalError):
    pass
