"""Exception types raised across the package."""


class CSCVError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(CSCVError, ValueError):
    """An argument violates an operation's precondition."""


class DegenerateInputError(CSCVError, ValueError):
    """The input carries no usable information (e.g. a zero measurement norm)."""


class IllConditionedSupportError(CSCVError, ArithmeticError):
    """A least-squares subproblem on the selected support is numerically singular."""

    def __init__(self, message, condition=None, support=None):
        super().__init__(message)
        self.condition = condition
        self.support = support


class InsufficientCVRowsError(CSCVError, ValueError):
    """The adaptive stopping rule is inapplicable: sqrt(r_j) <= 3 ln p."""

    def __init__(self, message, r=None, p=None):
        super().__init__(message)
        self.r = r
        self.p = p


class InvalidScheduleError(InsufficientCVRowsError):
    """An adaptive schedule fails validation before any decoding happens."""
