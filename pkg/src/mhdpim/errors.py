"""Exception hierarchy. Every error carries a short machine-readable ``code``."""


class MHDError(Exception):
    code = "error"


class InvalidArgument(MHDError, ValueError):
    code = "invalid-argument"


class EvaluationFailure(MHDError, ArithmeticError):
    code = "evaluation-failure"


class LinearSolveFailure(MHDError):
    code = "linear-solve-failure"


class NonconvergenceError(MHDError):
    """Picard sweeps exhausted ``maxit``; ``report`` holds the partial history."""

    code = "nonconvergence"

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class InsufficientHistory(MHDError):
    code = "insufficient-history"


class EstimatorSingular(MHDError, ZeroDivisionError):
    code = "estimator-singular"


class AdaptivityFailure(MHDError):
    code = "adaptivity-failure"

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state
