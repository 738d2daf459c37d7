"""
Errors - Exception hierarchy shared by blocks, agents and the CLI
"""


class MappingError(Exception):
    """Base class for every error raised by the mapping system."""


class ConfigurationError(MappingError, ValueError):
    """Invalid domain, grid, simulation or experiment configuration."""


class OutOfDomainError(MappingError, ValueError):
    """A point lies outside the domain bounds."""


class SingularityError(MappingError, ValueError):
    """A point coincides with a transmitter position."""


class NumericalError(MappingError, ArithmeticError):
    """A numerical invariant was violated (e.g. covariance lost PSD)."""


class UndefinedBoundError(MappingError, ValueError):
    """The completeness bound was requested for a cell without data."""


class DegenerateInputError(MappingError, ValueError):
    """Input has no usable content (e.g. an empty barcode)."""


class InsufficientDataError(MappingError, ValueError):
    """Too few samples for a statistic."""


class DimensionMismatchError(MappingError, ValueError):
    """Two grids or maps do not have the same shape."""
