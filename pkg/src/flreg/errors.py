"""Exception types shared across the package."""


class FlregError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatchError(FlregError, ValueError):
    """Operands live on different grids or have incompatible shapes."""


class ParameterError(FlregError, ValueError):
    """A numeric argument violates an operation's precondition."""


class RankError(ParameterError):
    """Requested truncation level exceeds the usable spectral rank."""


class DegenerateSpectrumError(ParameterError):
    """The reference spectrum is numerically tied where distinct eigenvalues
    are required."""


class InsufficientDataError(ParameterError):
    """Too few observations for the requested computation."""


class DataFormatError(FlregError, ValueError):
    """A file or text blob does not match the expected on-disk format."""
