"""Exception hierarchy.

Validation problems derive from :class:`ValueError`; numerical failures
derive from :class:`ConvergenceError`.  The CLI maps the first family to
exit status 2 and the second to exit status 3.
"""


class LatticeError(Exception):
    """Base class for all package errors."""


class ValidationError(LatticeError, ValueError):
    """An input violates a documented precondition."""


class WindowTooSmallError(ValidationError):
    """The lattice window cannot hold the object it is asked to hold."""

    def __init__(self, message, suggested_n=None):
        super().__init__(message)
        self.suggested_n = suggested_n


class BranchAmbiguityError(ValidationError):
    """A spectral parameter on the cut (0, 4) was given without a side."""


class EdgeSingularityError(ValidationError):
    """An operation is singular at a band edge (lambda = 0 or 4)."""


class NonGenericError(ValidationError):
    """The potential has a zero-energy (or lambda = 4) resonance."""


class ConvergenceError(LatticeError, ArithmeticError):
    """A numerical procedure failed to reach its tolerance."""

    def __init__(self, message, achieved_error=None):
        super().__init__(message)
        self.achieved_error = achieved_error


class SingularResolventError(ConvergenceError):
    """The truncated system is singular at the requested spectral parameter."""

    def __init__(self, message, nearest_eigenvalue=None):
        super().__init__(message)
        self.nearest_eigenvalue = nearest_eigenvalue
