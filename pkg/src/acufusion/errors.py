"""Exception hierarchy shared by all toolkit modules.

Every error raised on a contract violation derives from ToolkitError so
callers (and the CLI) can map failures to exit codes without string
matching.
"""


class ToolkitError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(ToolkitError):
    """Invalid configuration or parameter value."""


class SpanError(ToolkitError):
    """Requested time span is not covered by the source series."""


class DegenerateInput(ToolkitError):
    """Input too short or otherwise unusable for the operation."""


class LengthMismatch(ToolkitError):
    """Series lengths or sample intervals do not agree."""


class WindowTooLong(ToolkitError):
    """Analysis window exceeds the series extent."""


class SingularInnovation(ToolkitError):
    """Kalman innovation covariance is not invertible (invalid R)."""


class MissingChannel(ToolkitError):
    """A required channel is absent from the recording session."""


class NoCyclesFound(ToolkitError):
    """Cycle segmentation produced no complete cycles."""


class InconsistentStates(ToolkitError):
    """Detected bursts disagree with the motion-state timeline."""


class EmptyInput(ToolkitError):
    """Operation called with an empty collection."""


class SeriesTooShort(ToolkitError):
    """Series too short for the requested cluster sizes."""


class FitUnstable(ToolkitError):
    """Noise-coefficient fit found no usable slope region."""


class DegenerateGroup(ToolkitError):
    """Statistical group too small or with zero variance."""


class IoError(ToolkitError):
    """File could not be read, parsed, or written."""
