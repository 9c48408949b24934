"""Exception hierarchy shared by every module."""


class CdSphereError(Exception):
    """Base class for library errors."""


class ParameterError(CdSphereError, ValueError):
    """Invalid or out-of-range parameters."""


class DomainError(CdSphereError, ValueError):
    """Argument outside the domain of an operation (angle, probability, ...)."""


class ConvergenceError(CdSphereError, RuntimeError):
    """A numerical procedure failed to reach its tolerance.

    ``detail`` carries whatever the procedure had at the point of failure
    (error estimate, final bracket, ...).
    """

    def __init__(self, message, detail=None):
        super().__init__(message)
        self.detail = detail


class TheoremViolation(CdSphereError, AssertionError):
    """A proven inequality failed numerically. This indicates a bug."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
