"""Exception types raised across the package."""


class CBSError(Exception):
    """Base class for all package errors."""


class ParseError(CBSError, ValueError):
    pass


class DimensionError(CBSError, ValueError):
    pass


class DomainError(CBSError, ValueError):
    """An argument lies outside the domain an operation is defined on."""


class ConvergenceError(CBSError, RuntimeError):
    def __init__(self, message, residual=None, interval=None):
        super().__init__(message)
        self.residual = residual
        self.interval = interval


class InfeasibleTruncationError(CBSError, ValueError):
    pass


class DegenerateAnchorError(CBSError, ValueError):
    pass


class IllConditionedFactorError(CBSError, ValueError):
    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


class EmptySupportError(CBSError, ValueError):
    pass


class DegenerateVarianceError(CBSError, ValueError):
    pass


class InfiniteVarianceError(CBSError, ValueError):
    pass


class ContractViolationError(CBSError, ValueError):
    pass
