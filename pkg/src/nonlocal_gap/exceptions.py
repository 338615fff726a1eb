"""Exception hierarchy shared by all modules."""


class NonlocalGapError(Exception):
    """Base class for errors raised by this package."""


class InvalidInputError(NonlocalGapError, ValueError):
    """An argument is non-finite, out of range or inconsistent."""


class MomentDivergenceError(NonlocalGapError):
    """The kernel tail does not decay fast enough for a finite second moment."""


class SplitError(NonlocalGapError):
    """A domain cannot be split into two parts of equal measure."""


class EvaluationError(NonlocalGapError):
    """An integrand returned a non-finite value at a quadrature node."""

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class ConvergenceError(NonlocalGapError):
    """The Jacobi eigensolver did not reach its off-diagonal tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class IllConditionedBasisError(NonlocalGapError):
    """Gram-Schmidt met a numerically dependent basis candidate."""


class BracketError(NonlocalGapError):
    """Bisection bracket endpoints do not straddle a sign change."""

    def __init__(self, message, endpoints=None):
        super().__init__(message)
        self.endpoints = endpoints


class ConfigError(NonlocalGapError):
    """Malformed or incomplete run configuration."""
