"""Exception hierarchy shared by the simulation modules."""


class CasimirError(Exception):
    """Base class for all library errors."""


class DomainError(CasimirError, ValueError):
    """Argument outside the domain of a function (non-finite, negative mass, ...)."""


class ConvergenceError(CasimirError, ArithmeticError):
    """A numerical procedure failed to reach its tolerance.

    ``error_estimate`` carries the achieved error bound, ``t`` the time point
    when the failure happened inside a coefficient series.
    """

    def __init__(self, message, error_estimate=None, t=None):
        super().__init__(message)
        self.error_estimate = error_estimate
        self.t = t


class TruncationError(CasimirError):
    """The number basis is too small for the state being represented."""


class IntegrationError(CasimirError):
    """Time stepping failed (step-size underflow, trace drift out of budget)."""


class PreconditionError(CasimirError, ValueError):
    """Caller violated a documented precondition."""
