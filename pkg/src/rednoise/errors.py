"""Exception hierarchy shared across the package."""


class RednoiseError(Exception):
    """Base class for all package errors."""


class DomainError(RednoiseError, ValueError):
    """An argument is outside the mathematical domain of an operation."""


class ConfigError(RednoiseError, ValueError):
    """A configuration object is inconsistent or infeasible."""


class EstimationError(RednoiseError, RuntimeError):
    """An estimator could not produce a valid result."""


class AnalysisError(RednoiseError, RuntimeError):
    """A windowed analysis could not be carried out on the given data."""
