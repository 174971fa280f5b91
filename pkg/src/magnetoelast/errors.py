"""Exception types shared by the solver modules."""


class DomainError(ValueError):
    """Input outside the domain of a constitutive closure (det F <= 0, w < 0, ...)."""


class SolverError(RuntimeError):
    """A nonlinear or linear solve did not converge.

    ``info`` carries whatever diagnostics the failing stage collected
    (residual history, offending cell, ...).
    """

    def __init__(self, message, info=None):
        super().__init__(message)
        self.info = info or {}


class ValidationError(ValueError):
    """Scenario or material rejected; ``violations`` lists every problem found."""

    def __init__(self, message, violations=()):
        self.violations = list(violations)
        super().__init__(message)
