"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Input violates a documented precondition (shape, finiteness, config)."""


class DomainError(ValueError):
    """Input is outside the mathematical domain of an operation."""


class ConvergenceError(RuntimeError):
    """An iterative routine hit its iteration limit.

    The best iterate found so far is kept on ``best`` so callers can decide
    whether it is good enough.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class BoundViolation(RuntimeError):
    """An achievable rate exceeded the upper bound on a pure-LOS drop."""
