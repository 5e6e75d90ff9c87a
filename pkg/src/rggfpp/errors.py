"""Exception types shared across modules."""


class ParameterError(ValueError):
    """Invalid model or run parameter."""


class SubcriticalError(RuntimeError):
    """The sample has no usable giant component (q(x) is undefined)."""


class IntegrityError(RuntimeError):
    """Data violates an invariant the algorithm relies on (e.g. a negative weight)."""


class GuardError(ParameterError):
    """Request exceeds a computational guard (e.g. exponential enumeration)."""


class UnsupportedDimensionError(ParameterError):
    pass


class NoNeighborError(RuntimeError):
    """N_alpha(S) = 0: the empirical jump kernel is undefined."""


class SubcriticalQuotaError(RuntimeError):
    """Too many replicas of an experiment came out subcritical."""
