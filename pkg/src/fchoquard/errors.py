"""Exception and warning types raised by the library."""


class FclError(Exception):
    """Base class for every error raised by :mod:`fchoquard`."""


class ConfigurationError(FclError, ValueError):
    pass


class UnsupportedDimensionError(ConfigurationError):
    pass


class InvalidExponentError(FclError, ValueError):
    pass


class RegimeError(FclError):
    """Operation is undefined in the regime selected by the exponents."""


class UndefinedFiberError(FclError):
    """The fibering map has no interior maximiser (e.g. the Hartree term vanishes)."""


class ZeroMassError(FclError, ValueError):
    pass


class ScalingDegradedError(FclError):
    """Dilation lost too much mass to resampling; carries the renormalisation factor."""

    def __init__(self, factor, message=None):
        self.factor = float(factor)
        super().__init__(message or f"mass renormalisation factor {factor!r} outside tolerance")


class EstimationUnstableError(FclError):
    pass


class InsufficientDataError(FclError):
    pass


class DomainError(FclError, ValueError):
    pass


class ConfigParseError(ConfigurationError):
    pass


class TruncationWarning(UserWarning):
    """A field carries non-negligible mass near the box boundary."""


class ResolutionWarning(UserWarning):
    """A sampled profile is too narrow or too wide for the grid."""
