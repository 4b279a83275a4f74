"""Exception and warning types shared across the package."""


class MedshrinkError(ValueError):
    """Base class for all errors raised by this package."""


class ConfigError(MedshrinkError):
    """A run configuration is incomplete or inconsistent."""


class DataError(MedshrinkError):
    """Input data violate a documented precondition (shape, coding, missingness)."""


class IdentifiabilityError(MedshrinkError):
    """A design or instrument matrix is rank-deficient beyond the condition limit."""


class InfeasibleScenarioError(MedshrinkError):
    """Simulation parameters imply a non-positive error variance."""


class DegenerateCombinationError(MedshrinkError):
    """The two estimators agree on the selected coordinates; the shrinkage
    weight is undefined (zero denominator)."""

    def __init__(self, message, tau_hat, denom):
        super().__init__(message)
        self.tau_hat = tau_hat
        self.denom = denom


class WeakInstrumentWarning(UserWarning):
    """First-stage F statistic of the excluded instruments fell below the threshold."""
