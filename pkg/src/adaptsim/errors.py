"""Exception types shared across the package."""


class AdaptsimError(Exception):
    """Base class for all package-specific errors."""


class ProfileTooSmallError(AdaptsimError):
    """Raised when a profile has too few points to fit a regression."""


class InsufficientCapacityError(AdaptsimError):
    """Raised when a configuration cannot absorb the requested load."""


class UndefinedAccuracyError(AdaptsimError):
    """Raised when average accuracy is requested over zero total quota."""


class InfeasibleError(AdaptsimError):
    """Raised when no configuration satisfies budget, load and latency."""


class InstanceTooLargeError(AdaptsimError):
    """Raised when an instance exceeds the documented solver size caps."""


class OrderingError(AdaptsimError):
    """Raised on out-of-order timestamps or second indices."""


class NoDataError(AdaptsimError):
    """Raised when a prediction is requested from an empty history."""


class InvalidTableError(AdaptsimError):
    """Raised on a quota table with no positive weight or a negative one."""


class NotConfiguredError(AdaptsimError):
    """Raised when the dispatcher is used before any table is set."""


class ParseError(AdaptsimError):
    """Malformed input file. Carries the offending line when known."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class TraceMismatchError(AdaptsimError):
    """Raised when compared simulations do not share trace and profiles."""
