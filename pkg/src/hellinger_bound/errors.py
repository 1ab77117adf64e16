"""Exception hierarchy."""


class HellingerBoundError(ValueError):
    """Base class for all errors raised by this package."""


class InvalidSpec(HellingerBoundError):
    pass


class InvalidPair(HellingerBoundError):
    pass


class EqualMeans(HellingerBoundError):
    """The two means coincide; no binary attainer exists and the bound is 0."""


class DegenerateSpec(HellingerBoundError):
    """A standard deviation is zero where the operation needs it positive."""


class BoundaryAttainer(HellingerBoundError):
    """The attainer puts all mass on one point, so a ratio in g(.) is 0/0."""


class InvalidLaw(HellingerBoundError):
    pass


class InsufficientCoverage(HellingerBoundError):
    """More than the allowed tail mass falls outside the truncation window."""


class InfeasibleSupport(HellingerBoundError):
    """No feasible moment-matching pair was found on the sampled supports."""


class InvalidParameters(HellingerBoundError):
    pass


class ConvergenceFailure(HellingerBoundError):
    """No restart reached the moment tolerance.

    The best-effort record (smallest residual) is attached as ``record``.
    """

    def __init__(self, message, record=None):
        super().__init__(message)
        self.record = record
