"""Exception types shared across the package."""


class FtdoError(Exception):
    """Base class for all package errors."""


class SelfLoopError(FtdoError):
    pass


class OutOfRangeError(FtdoError):
    pass


class MalformedLineError(FtdoError):
    pass


class DuplicateEdgeError(FtdoError):
    pass


class DegenerateCutError(FtdoError):
    pass


class EmptyGraphError(FtdoError):
    pass


class NotSparseError(FtdoError):
    """Syndrome decode failed: net vector is not a <=k-sparse 0/1 vector."""


class DecodeFailureError(FtdoError):
    """A low-degree vertex sketch failed to decode during a query.

    Signals an upstream contract violation (bad deletion routing or an
    out-of-budget deletion set); never silently swallowed.
    """

    def __init__(self, msg, vertex=None, component=None):
        super().__init__(msg)
        self.vertex = vertex
        self.component = component


class SamplerExhaustedError(FtdoError):
    """All sampler copies for a vertex came up short of its tracked degree."""

    def __init__(self, msg, vertex=None, component=None):
        super().__init__(msg)
        self.vertex = vertex
        self.component = component


class InvalidDeletionError(FtdoError):
    pass


class BudgetExceededError(FtdoError):
    pass


class UnknownEdgeError(FtdoError):
    pass


class DegreeTooLowError(FtdoError):
    pass


class InvalidEventError(FtdoError):
    pass


class DeletionBudgetExceededError(BudgetExceededError):
    pass


class InfeasibleParamsError(FtdoError):
    pass
