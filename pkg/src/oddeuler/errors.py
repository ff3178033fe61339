"""Exception types shared across the package."""


class OddEulerError(Exception):
    """Base class for all package errors."""


class ResolutionError(OddEulerError):
    """Grid too coarse for the requested spectral content."""


class SymmetryError(OddEulerError):
    """Data violates the odd-odd symmetry class."""


class DomainError(OddEulerError):
    """Point or box outside the valid domain."""


class ParameterError(OddEulerError):
    """Scenario or builder parameter outside its allowed range."""


class StepSizeError(OddEulerError):
    """Time step violates the CFL limit."""


class ConfigError(OddEulerError):
    """Malformed or inconsistent run configuration."""


class FitError(OddEulerError):
    """Growth-rate fit cannot be performed on the given samples."""
