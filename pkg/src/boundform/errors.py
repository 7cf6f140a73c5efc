"""Exception hierarchy shared by all modules."""


class BoundFormError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(BoundFormError, ValueError):
    """Invalid physical or run configuration."""


class DomainError(BoundFormError, ValueError):
    """Argument outside the domain of a function (e.g. |x| > L)."""


class ContractViolation(BoundFormError, ValueError):
    """A precondition of an operation does not hold."""


class UndefinedInputError(BoundFormError, ValueError):
    """Input for which the requested quantity is not defined."""


class NumericalError(BoundFormError, ArithmeticError):
    """A numerical procedure failed (no convergence, lost accuracy)."""


class IntegrationQualityError(NumericalError):
    """Norm defect of a time integration exceeded its tolerance."""


class NotSettledError(NumericalError):
    """Occupations still drift where they are expected to be constant."""


class GridResolutionError(NumericalError):
    """Spatial grid too coarse for the requested quantity."""
