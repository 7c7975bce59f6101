"""Exception types shared across the package."""


class KContactError(Exception):
    """Base class for all package errors."""


class ChartError(KContactError):
    """A chart definition is invalid (bad metric, degenerate contact form, ...)."""


class ConfigError(KContactError):
    """A configuration file or dictionary failed validation."""


class DomainError(KContactError):
    """A point or curve left the chart domain."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class SamplingError(KContactError):
    """Path sampling could not produce in-domain curves."""


class NumericsError(KContactError):
    """A numerical procedure diverged (closure blow-up, singular solve, ...)."""
