class KernelSumError(Exception):
    """Base class for errors raised by this package."""


class SolverError(KernelSumError):
    pass


class Unbounded(SolverError):
    """The hard-margin dual has no finite maximum (data not separable)."""


class NotConverged(SolverError):
    def __init__(self, message, residual=None, sweeps=None):
        super().__init__(message)
        self.residual = residual
        self.sweeps = sweeps


class NoFeasibleSupport(SolverError):
    """Support enumeration found no KKT point."""


class BoundViolation(KernelSumError):
    def __init__(self, message, details=None):
        super().__init__(message)
        self.details = details or {}


class ConfigError(KernelSumError, ValueError):
    pass
