"""Exception and warning types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of a function (e.g. ``t <= 0``)."""


class PreconditionError(ValueError):
    """A documented precondition on the inputs does not hold."""


class NumericalFailure(ArithmeticError):
    """A numerical routine did not reach its requested accuracy.

    Carries whatever the routine managed to compute so callers can decide
    whether the partial answer is still useful.
    """

    def __init__(self, message, estimate=None, error=None, indices=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error
        self.indices = indices


class ValidityWarning(UserWarning):
    """Parameters fall outside the regime where an approximation holds."""


class CoarseStepWarning(UserWarning):
    """Random-walk time step is coarse relative to the channel time scale."""
