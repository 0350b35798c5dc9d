"""Exception hierarchy shared by all fusionkz modules."""


class FusionKZError(Exception):
    """Base class for all errors raised by this package."""


class UnsupportedAlgebra(FusionKZError):
    """Requested series/rank has no built-in realization."""


class DimensionError(FusionKZError):
    """Vector or matrix dimensions do not match."""


class DomainError(FusionKZError):
    """Argument outside the operation's domain (non-dominant weight, bad z0, ...)."""


class InvarianceError(FusionKZError):
    """A subspace that must be g-invariant is not."""


class NotInCategory(FusionKZError):
    """Module fails the level constraint: x_theta^(l+1) does not act as zero."""


class NotAMorphism(FusionKZError):
    """A map that must intertwine the g-actions does not."""


class InternalInvariantViolation(FusionKZError):
    """A condition guaranteed by theory failed; indicates a bug, not bad input."""


class VerificationFailure(FusionKZError):
    """A numerical verification exceeded its tolerance.

    Carries the report with raw residuals in ``args[1]`` when available.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class PrecisionExhausted(FusionKZError):
    """The requested accuracy is unreachable at the configured precision."""
