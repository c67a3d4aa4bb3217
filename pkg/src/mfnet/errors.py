"""Exception hierarchy shared across the package."""


class MfnetError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(MfnetError, ValueError):
    """Invalid input: bad shapes, broken invariants, out-of-range config."""


class NumericalError(MfnetError, ArithmeticError):
    """A numerical procedure produced an unusable result."""


class ConvergenceError(NumericalError):
    """Iterative solver stopped before reaching its tolerance."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class IdxFormatError(ValidationError):
    """Malformed IDX file (bad magic, truncated payload, bad dims)."""


class EigenGapError(NumericalError):
    """Eigenvalue spectrum too degenerate for a well-posed comparison."""
