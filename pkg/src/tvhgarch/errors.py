"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the region where the computation is defined."""


class NumericalError(ArithmeticError):
    """A computation produced a value that violates a numerical guarantee."""


class DegenerateTestError(NumericalError):
    """A test statistic cannot be formed (singular information, zero variance)."""


class UnsupportedOrderError(DomainError):
    """The requested operation is only defined for particular model orders."""
