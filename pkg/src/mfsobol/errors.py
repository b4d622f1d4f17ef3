"""Exception hierarchy shared by all modules."""


class MfsobolError(Exception):
    """Base class for every error raised by the package."""


class DomainError(MfsobolError, ValueError):
    """An argument lies outside the domain of the operation."""


class UnsupportedDimensionError(DomainError):
    pass


class SolverError(MfsobolError, RuntimeError):
    """A forward solver failed (divergence, CFL violation, collapsed lumen)."""

    def __init__(self, message: str, step: int | None = None, node: int | None = None,
                 index: int | None = None):
        super().__init__(message)
        self.step = step
        self.node = node
        self.index = index


class DegenerateStatisticsError(MfsobolError, ValueError):
    """Pilot data has too few distinct values to define moments/correlations."""


class AllocationError(MfsobolError, ValueError):
    """Pilot statistics do not admit the closed-form optimal allocation."""

    def __init__(self, message: str, violations: list | None = None):
        super().__init__(message)
        self.violations = violations or []


class BudgetTooSmallError(AllocationError):
    pass


class LeastSquaresError(MfsobolError, ValueError):
    pass


class ConfigError(MfsobolError, ValueError):
    """Invalid campaign configuration; names the offending key."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


class StageOrderError(MfsobolError, RuntimeError):
    """A campaign stage was invoked before its prerequisite."""
