"""Exception types shared across the package."""

__all__ = ["DevsplitError", "DimensionMismatchError", "MetricError",
           "OperatorContractError", "ConfigurationError", "SafeguardViolationError"]


class DevsplitError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatchError(DevsplitError, ValueError):
    """Operands of an inner product / operator application disagree in dimension."""


class MetricError(DevsplitError, ValueError):
    """The supplied metric matrix is not symmetric positive definite."""


class OperatorContractError(DevsplitError, RuntimeError):
    """An operator oracle violated its contract (e.g. non-monotone resolvent)."""


class ConfigurationError(DevsplitError, ValueError):
    """A run configuration or parameter schedule violates its admissibility rules."""


class SafeguardViolationError(DevsplitError, RuntimeError):
    """A deviation policy proposed (u, v) whose weighted norm exceeds the budget.

    Carries the offending left-hand side and the available budget so callers
    can log or wrap the policy in a clipping adapter instead.
    """

    def __init__(self, lhs: float, budget: float):
        self.lhs = lhs
        self.budget = budget
        super().__init__(
            f"deviation norm condition violated: lhs={lhs:.6e} > budget={budget:.6e}"
        )
