"""Exception hierarchy shared by all solver modules."""


class GameError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(GameError):
    """Malformed instance, strategy, or argument."""


class DomainError(GameError):
    """Argument outside the mathematical domain of an operation."""


class InfeasibleMarginalError(GameError):
    """Vector is not a valid marginal attack profile for the given budget."""


class EnumerationCapError(GameError):
    """Exhaustive best response would exceed the configured enumeration cap."""

    def __init__(self, required: int, cap: int):
        self.required = required
        self.cap = cap
        super().__init__(
            f"exhaustive best response needs {required} candidate sets, "
            f"exceeding the enumeration cap of {cap}"
        )


class SolverFailureError(GameError):
    """The LP solver could not complete (cycling, singular basis, ...)."""


class NonconvergenceError(GameError):
    """Iteration limit reached before the termination criterion was met."""

    def __init__(self, message: str, incumbent=None):
        self.incumbent = incumbent
        super().__init__(message)


class NumericalInconsistencyError(GameError):
    """Internal quantities disagree beyond tolerance (dual/pricing mismatch)."""


class GenerationError(GameError):
    """Random instance generation failed to produce a valid instance."""
