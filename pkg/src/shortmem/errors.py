"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class ShortMemError(Exception):
    """Base class for errors raised by this package."""


class CapacityError(ShortMemError, ValueError):
    """A requested index range or work size exceeds the configured capacity."""


class TailToleranceError(ShortMemError, ValueError):
    """The coefficient truncation cannot meet the requested tail tolerance."""


class DomainError(ShortMemError, ValueError):
    """An argument lies outside the domain an operation supports."""


class ConfigError(ShortMemError, ValueError):
    """Malformed or invalid configuration text."""

    def __init__(self, message: str, *, key: str | None = None, line: int | None = None):
        super().__init__(message)
        self.key = key
        self.line = line


class BoundViolation(ShortMemError, AssertionError):
    """A proven inequality was found violated by a computation."""


class QuadratureError(ShortMemError, ArithmeticError):
    """Adaptive quadrature did not reach the requested accuracy."""


class CellError(ShortMemError):
    """A Monte Carlo cell failed; carries the ``(n, replicate)`` coordinates."""

    def __init__(self, message: str, *, n: int, replicate: int):
        super().__init__(f"n={n}, replicate={replicate}: {message}")
        self.n = n
        self.replicate = replicate
