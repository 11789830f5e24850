"""Exception types shared across the package."""


class GclsimError(Exception):
    """Base class for all package-specific errors."""


class DimensionError(GclsimError, ValueError):
    """Operator or state dimensions are invalid or inconsistent."""


class UnsupportedDriveError(GclsimError, ValueError):
    """Drive polynomial order not supported by the dissipator."""


class ConvergenceError(GclsimError, RuntimeError):
    """An iterative computation failed to reach its tolerance."""


class InstabilityError(GclsimError, RuntimeError):
    """NaN or non-finite values appeared during integration."""


class AmbiguousFixedPointError(GclsimError, RuntimeError):
    """The one-period map has a (near-)degenerate unit eigenvalue."""


class NoTemperatureError(GclsimError, ValueError):
    """Population distribution does not decay; no temperature fit exists."""


class ConfigError(GclsimError, ValueError):
    """Invalid, unknown, or inconsistent configuration input."""
