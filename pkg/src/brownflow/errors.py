"""Exception types shared across the package."""


class BrownflowError(Exception):
    """Base class for all package-specific failures."""


class SingularPointError(BrownflowError):
    """Evaluation requested exactly at a non-removable singularity."""


class ExponentOverflowError(BrownflowError):
    """The conformal-map exponent left double-precision range."""

    def __init__(self, exponent):
        self.exponent = exponent
        super().__init__(f"exponent overflow: Re(exponent) = {exponent!r}")


class ContinuationError(BrownflowError):
    """Newton path-following failed to converge.

    Carries the last iterate and the path parameter reached so the caller
    can inspect how far the continuation got.
    """

    def __init__(self, message, last_iterate=None, reached=None):
        self.last_iterate = last_iterate
        self.reached = reached
        super().__init__(message)


class DomainError(BrownflowError):
    """Input point lies outside the operation's domain of validity."""


class AccuracyError(BrownflowError):
    """A computed quantity failed its built-in accuracy check."""


class TopologyError(BrownflowError):
    """Traced boundary has the wrong number of loops for the parameters."""


class StepSizeError(BrownflowError):
    """SDE trajectory blew up; a finer time partition is needed."""


class EigensolveError(BrownflowError):
    """Dense nonsymmetric eigensolver did not converge."""


class SingularMatrixError(BrownflowError):
    """Matrix is singular (or numerically so) where an inverse is required."""


class UnsupportedPolynomialError(BrownflowError):
    """Closed-form transform requested for a polynomial outside the table."""


class ConditioningWarning(UserWarning):
    """Solve proceeded but the condition estimate exceeded the trust bound."""
