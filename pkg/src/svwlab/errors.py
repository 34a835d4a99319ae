"""Exception types shared across the package."""


class SvwError(Exception):
    """Base class for all package errors."""


class ConfigError(SvwError):
    """Invalid or inconsistent run configuration (CLI exit code 2)."""


class InvalidParameterError(SvwError):
    """A numeric parameter is outside its admissible range."""


class CflViolationError(SvwError):
    """Time step exceeds the accuracy bound dt <= dx / (2 c2)."""


class IterationFailureError(SvwError):
    """Safeguarded Newton iteration failed to converge; the model is malformed."""


class GridMismatchError(SvwError):
    """Two fields that must share a grid do not."""


class EmptyWindowError(SvwError):
    """A moments window selected no samples."""
