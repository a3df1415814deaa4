"""Exception types raised across the package."""


class ParameterError(ValueError):
    """A parameter lies outside its valid range."""


class ConvergenceError(ArithmeticError):
    """An iterative routine hit its iteration cap.

    ``index`` is the position of the eigenvalue (or unknown) that failed.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class ConsistencyError(ArithmeticError):
    """Two independent computations of the same quantity disagree."""


class PoleError(ZeroDivisionError):
    """An exact expectation hit a zero denominator."""
