"""Exception hierarchy shared by every module.

Each class maps onto one CLI exit code (see :mod:`lsa_lab.cli`).
"""


class LSAError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class DomainError(LSAError, ValueError):
    """An argument lies outside the domain of the operation."""

    exit_code = 2


class DimensionError(DomainError):
    """Array shapes are inconsistent."""


class ParseError(LSAError):
    """An instance or configuration file could not be parsed."""

    exit_code = 2


class AssumptionError(LSAError):
    """A modelling assumption (Hurwitz, stationarity, mixing) fails."""

    exit_code = 3


class StabilityError(AssumptionError):
    """The mean matrix is not Hurwitz-stable (-Abar not Hurwitz)."""


class StationarityError(AssumptionError):
    """Declared means do not match the stationary averages of the tables."""


class ErgodicityError(AssumptionError):
    """The transition matrix has no unique stationary distribution."""


class MixingCertificateError(AssumptionError):
    """A declared mixing time does not satisfy the Dobrushin decay certificate."""


class HorizonExceededError(AssumptionError):
    """No power of the kernel within the search horizon mixes to 1/4."""


class PreconditionError(AssumptionError):
    """A step size exceeds the threshold required by a stability result."""


class GenerationError(AssumptionError):
    """A random instance generator ran out of retries."""


class NumericalError(LSAError, ArithmeticError):
    """A dense solve produced a residual above tolerance."""

    exit_code = 4

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class BudgetError(LSAError):
    """Requested simulation work exceeds the configured budget."""

    exit_code = 5


class ConfigurationError(DomainError):
    """An estimator was configured with unusable sizes."""
