from typing import Any, Optional


class SpdtError(Exception):
    """Base class for every error raised by the spdt package."""


class ParameterValidationError(SpdtError, ValueError):
    """Raised when a model or disease parameter is out of range."""

    def __init__(self, message: str, field: Optional[str] = None):
        self.message = message
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class DistributionError(SpdtError, ValueError):
    """Raised when a sampler or pmf is called outside its support."""


class GraphValidationError(SpdtError):
    """Raised when a TemporalGraph violates one of its invariants."""


class NeighborSelectionError(SpdtError):
    """Raised when an active copy asks for more neighbors than exist."""


class EstimationError(SpdtError):
    """Raised when a maximum-likelihood fit cannot produce an estimate."""

    def __init__(self, message: str, last_iterate: Any = None):
        self.message = message
        self.last_iterate = last_iterate
        super().__init__(message if last_iterate is None else f"{message} (last iterate: {last_iterate})")


class IngestionError(SpdtError):
    """Raised when a location-update file cannot be read."""


class FileFormatError(SpdtError, ValueError):
    """Raised when a graph, parameter, CIP or series file is malformed."""

    def __init__(self, message: str, line_number: Optional[int] = None):
        self.message = message
        self.line_number = line_number
        super().__init__(f"line {line_number}: {message}" if line_number else message)


class DiffusionError(SpdtError, ValueError):
    """Raised for invalid exposure or SIR inputs."""


class MetricError(SpdtError, ValueError):
    """Raised when a metric's inputs are incompatible."""


class RunConfigError(SpdtError):
    """Raised when a command is configured with unusable paths or values."""
