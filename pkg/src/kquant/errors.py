"""Exception types shared across kquant."""


class ContractViolation(ValueError):
    """An input violates an operation's structural precondition."""


class DomainError(ValueError):
    """An input lies outside the mathematical domain (non-PD, non-convex, ...)."""


class DegenerateTriangle(ValueError):
    """A comparison triangle has a vanishing side at the queried vertex."""


class ToleranceFailure(RuntimeError):
    """Adaptive refinement exhausted its budget before meeting the tolerance.

    The best available estimate and its error estimate are attached.
    """

    def __init__(self, message, value=None, err_est=None):
        super().__init__(message)
        self.value = value
        self.err_est = err_est
