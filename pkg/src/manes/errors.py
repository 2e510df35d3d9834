"""Exception hierarchy shared by all modules."""


class ManesError(Exception):
    """Base class for numerical failures (CLI exit code 3)."""


class ConstraintViolation(ManesError):
    pass


class NonCritical(ManesError):
    """No real critical volatility exists for the given parameters."""


class InsufficientBranch(ManesError):
    pass


class CriticalDivergence(ManesError):
    pass


class NearSingular(ManesError):
    pass


class NonConvergence(ManesError):
    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = residual


class SolverFailure(ManesError):
    pass


class UnstableStep(ManesError):
    pass


class CFLViolation(ManesError):
    pass


class InsufficientQuotes(ManesError):
    pass


class OptimizerFailure(ManesError):
    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
