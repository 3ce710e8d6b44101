"""Exception hierarchy shared by every qcclab module."""


class QccLabError(Exception):
    """Base class for all qcclab errors."""


class InvalidInputError(QccLabError, ValueError):
    """Raised when an argument violates a documented precondition."""


class NotCompletelyPositiveError(QccLabError, ValueError):
    """Raised when a Choi matrix has a negative eigenvalue beyond tolerance."""


class ConvergenceError(QccLabError, RuntimeError):
    """Raised when an iterative construction hits its step cap."""


class CapacityError(QccLabError, ValueError):
    """Raised when a requested object exceeds the dense dimension caps."""


class PropagatorDefectError(QccLabError, RuntimeError):
    """Raised when a computed propagator fails its CPTP diagnostics."""


class FixedPointVerificationError(QccLabError, RuntimeError):
    """Raised when a claimed ersatz-QCC solution is not a fixed point."""


class UndefinedRatioError(QccLabError, ZeroDivisionError):
    """Raised when a level ratio has an identically vanishing denominator."""


class RankAmbiguityWarning(UserWarning):
    """Emitted when a numerical rank decision sits on a small spectral gap."""
