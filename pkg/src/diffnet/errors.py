"""Exception hierarchy shared by every diffnet module."""


class DiffnetError(Exception):
    """Base class for all errors raised by the package."""


class ParseError(DiffnetError):
    pass


class InvalidMatrix(DiffnetError):
    """Negative entry or row-sum violation.

    ``row`` is 0-based; messages number rows from 1.
    """

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class NotStochastic(DiffnetError):
    pass


class NoConvergence(DiffnetError):
    def __init__(self, message, residual=float("nan"), iterations=0):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class UnstableSystem(DiffnetError):
    pass


class SingularAtOmega(DiffnetError):
    pass


class OverlapError(DiffnetError):
    pass


class NotSevered(DiffnetError):
    pass


class TooLarge(DiffnetError):
    pass


class NoCutExists(DiffnetError):
    pass


class DuplicateInput(DiffnetError):
    pass


class LengthMismatch(DiffnetError):
    pass


class Unsettled(DiffnetError):
    pass


class SelfLoopSaturated(DiffnetError):
    pass
