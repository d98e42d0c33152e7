"""Exception hierarchy shared by the library and the CLI exit-code mapping."""


class MyersonDensityError(Exception):
    """Base class for all package errors."""


class DomainError(MyersonDensityError, ValueError):
    """An argument lies outside the region where an operation is defined."""


class InsufficientDataError(MyersonDensityError, ValueError):
    """The sample is too small or too degenerate for the requested estimate."""


class InvalidParameterError(MyersonDensityError, ValueError):
    """A configuration parameter violates its documented range."""


class RegularityViolation(InvalidParameterError):
    """The Chernoff scale bracket is negative, so regularity fails at the point."""


class CertificateError(MyersonDensityError, AssertionError):
    """A minimax certificate inequality does not hold."""


class ExperimentError(MyersonDensityError, RuntimeError):
    """Too many Monte Carlo replications failed."""


class ParseError(MyersonDensityError, ValueError):
    """Malformed input file."""

    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class ZeroDensityError(DomainError, ZeroDivisionError):
    """The density vanishes where a ratio by it is required."""
