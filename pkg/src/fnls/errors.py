"""Exception types shared across the package."""


class FnlsError(Exception):
    """Base class for all package errors."""


class ConfigError(FnlsError):
    """Invalid configuration or malformed input file.

    ``violations`` collects one message per offending field so a CLI run
    can report everything at once.
    """

    def __init__(self, message, violations=None):
        super().__init__(message)
        self.violations = list(violations or [])


class GridMismatchError(FnlsError):
    """Operands live on different grids."""


class AdmissibilityError(FnlsError):
    """Model parameters (n, s, alpha) outside the admissible range."""


class ConvergenceError(FnlsError):
    """An iterative solver stopped before reaching its tolerance."""

    def __init__(self, message, residual=None, iterations=None, diagnostics=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
        self.diagnostics = diagnostics or {}


class ContractionError(ConvergenceError):
    """Fixed-point map observed to expand; outside the contraction regime."""
