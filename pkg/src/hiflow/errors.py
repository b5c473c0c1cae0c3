"""Exception hierarchy shared by every hiflow module."""


class HiflowError(Exception):
    """Base class for all errors raised by hiflow."""


class DegenerateCurveError(HiflowError, ValueError):
    """Raised for curves with too few or coincident vertices."""


class NonUniformGridError(HiflowError, ValueError):
    """Raised when an operation needs an (approximately) uniform grid.

    Call :func:`hiflow.geometry.resample_uniform` first.
    """


class BlowupError(HiflowError, ArithmeticError):
    """Raised when max |k| exceeds the blow-up ceiling."""


class LinesearchFailure(HiflowError, ArithmeticError):
    """Raised when backtracking cannot find an acceptable step."""


class ConfigError(HiflowError, ValueError):
    """Raised for invalid scenario or sweep configuration."""


class SnapshotParseError(HiflowError, ValueError):
    """Raised when a snapshot file cannot be parsed."""
