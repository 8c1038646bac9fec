"""Exception types shared across the package."""


class FiberQEDError(Exception):
    """Base class for all package errors."""


class ConfigError(FiberQEDError):
    """Invalid configuration; message names the offending field."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class DomainError(FiberQEDError):
    """Input outside the mathematical/physical domain of an operation."""


class RangeError(FiberQEDError):
    """Result not representable (overflow of a special-function value)."""


class ConvergenceError(FiberQEDError):
    """An iterative or adaptive procedure failed to reach its tolerance."""

    def __init__(self, message, diagnostics=None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)


class PoleError(FiberQEDError):
    """Spectral point too close to a guided-mode pole for a plain solve."""
