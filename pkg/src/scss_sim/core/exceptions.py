"""Exception types raised across the package."""

from typing import Optional


class ScssSimError(Exception):
    """Base class for all package errors."""


class TruncationError(ScssSimError, ValueError):
    """The Fock basis is too small for the requested state or operator."""


class DimensionMismatchError(ScssSimError, ValueError):
    """Operands differ in truncation or mode count."""


class DegenerateStateError(ScssSimError, ArithmeticError):
    """A construction or projection produced a zero-norm state."""


class ConfigError(ScssSimError, ValueError):
    """Invalid experiment configuration or unknown profile."""


class DataFormatError(ScssSimError, ValueError):
    """Malformed input file or matrix text."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConvergenceWarning(UserWarning):
    """Iterative reconstruction stopped at its iteration limit."""
