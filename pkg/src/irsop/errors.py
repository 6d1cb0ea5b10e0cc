"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the function."""


class ConfigError(ValueError):
    """A configuration value or file is invalid."""


class InfeasibleMomentsError(ValueError):
    """Moments that no distribution can have (e.g. E[V^2] < E[V]^2)."""


class InfeasibleCorrelationError(ValueError):
    """Log-domain covariance gives a negative SINR log-variance.

    This points at inconsistent moment inputs upstream.
    """


class SearchRangeError(ValueError):
    """A bounded search could not reach its target inside the range."""

    def __init__(self, message, endpoints=None):
        super().__init__(message)
        self.endpoints = endpoints
