"""Exception hierarchy shared across the package.

The split matters to the CLI, which maps ParseError to exit code 2 and
every other ParityCalError to exit code 1.
"""


class ParityCalError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(ParityCalError, ValueError):
    """An input violates a documented invariant (bad sigma, bad range, ...)."""


class ParseError(ParityCalError, ValueError):
    """A file could not be parsed. Carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class UnsupportedVariantError(ParityCalError, TypeError):
    """An operation was called on a forecast variant it does not support."""


class UndefinedMetricError(ParityCalError, ValueError):
    """A metric is undefined for the given data (e.g. AUROC with one class)."""


class NumericError(ParityCalError, ArithmeticError):
    """A numeric routine produced non-finite intermediate values."""
