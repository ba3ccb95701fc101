"""Exception types raised across the package."""


class ChronoError(Exception):
    """Base class for every error raised by chronocalc."""


class DomainError(ChronoError, ValueError):
    """An input lies outside the domain an operation is defined on."""


class RangeError(ChronoError, OverflowError):
    """A result would leave the representable or validated range."""


class SingularityError(ChronoError, ArithmeticError):
    """A matrix or kernel is singular at the requested point.

    ``condition`` carries the condition-number estimate when one is available.
    """

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class ConvergenceError(ChronoError, RuntimeError):
    """An iterative procedure hit its iteration cap.

    ``history`` holds the successive error or residual values.
    """

    def __init__(self, message, history=()):
        super().__init__(message)
        self.history = list(history)


class BudgetError(ChronoError, RuntimeError):
    """The requested work exceeds a configured cost budget."""


class PartitionError(ChronoError, RuntimeError):
    """Cousin bisection could not resolve a subinterval within the depth cap."""

    def __init__(self, message, interval=None):
        super().__init__(message)
        self.interval = interval


class AccuracyWarning(UserWarning):
    """A computation completed but its accuracy is in doubt."""
