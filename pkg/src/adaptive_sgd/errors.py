"""Exception types shared across the package."""


class ContractError(ValueError):
    """Arguments violate a documented precondition (e.g. dimension mismatch)."""


class OperatorError(ValueError):
    """An inner-product operator is not symmetric positive definite."""


class InvalidSpec(ValueError):
    """A problem or run configuration fails validation."""


class OracleUnavailable(RuntimeError):
    """The requested analytic oracle is not provided by this problem."""


class DegenerateDirection(ArithmeticError):
    """An estimator observation cannot be formed (zero search direction)."""


class LineSearchError(RuntimeError):
    """The stochastic line search exhausted its trial budget."""

    def __init__(self, message, trials=None, alpha=None):
        super().__init__(message)
        self.trials = trials
        self.alpha = alpha


class RunError(RuntimeError):
    """A run aborted, e.g. because the iterate became non-finite."""

    def __init__(self, message, k=None):
        super().__init__(message)
        self.k = k
