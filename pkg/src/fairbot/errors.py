"""Exception types shared across the package."""


class FairbotError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(FairbotError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class DimensionMismatch(FairbotError, ValueError):
    """Vector or matrix dimensions are inconsistent."""


class NotPositiveDefinite(FairbotError, ArithmeticError):
    """A matrix required to be positive definite is not (or is numerically semidefinite)."""


class ConvergenceFailure(FairbotError, ArithmeticError):
    """An iterative numerical procedure exhausted its iteration budget."""


class TooFewMembers(FairbotError, ValueError):
    """An ensemble has too few members for the requested computation."""


class EmptySample(FairbotError, ValueError):
    """A sample statistic was requested for an empty sample."""


class ParseError(FairbotError, ValueError):
    """A dataset file could not be parsed."""


class SchemaError(FairbotError, ValueError):
    """A dataset file parsed but violates the expected schema."""


class NonFiniteValue(FairbotError, ValueError):
    """A dataset contains NaN or infinite entries."""


class MissingObservation(FairbotError, ValueError):
    """An operation requiring observations was run on a dataset without them."""


class SubsampleTooLarge(FairbotError, ValueError):
    """The requested member subsample does not fit in the available ensemble."""
