"""
Custom exception classes for V2XSentinel.

These exceptions provide better error categorization and enable
more specific error handling throughout the pipeline.
"""


class V2XSentinelError(Exception):
    """Base exception for all V2XSentinel errors."""

    def __init__(self, message: str, details: str = None):
        self.message = message
        self.details = details
        super().__init__(self.message)

    def __str__(self):
        if self.details:
            return f"{self.message}\nDetalles: {self.details}"
        return self.message


class TrajectoryFormatError(V2XSentinelError):
    """Raised when a trajectory file does not follow the expected schema."""
    pass


class TrajectoryGapError(V2XSentinelError):
    """Raised when a vehicle is missing from a frame."""

    def __init__(self, vehicle_id, frame):
        self.vehicle_id = vehicle_id
        self.frame = frame
        super().__init__(
            f"El vehículo {vehicle_id} no aparece en el frame {frame}",
            details=f"vehicle_id={vehicle_id}, frame={frame}"
        )


class InsufficientDataError(V2XSentinelError):
    """Raised when insufficient data for operation."""
    pass


class ParameterError(V2XSentinelError):
    """Raised when a parameter is outside its allowed range."""
    pass


class ChannelDomainError(V2XSentinelError):
    """Raised when a channel computation is evaluated outside its domain."""
    pass


class DimensionMismatchError(V2XSentinelError):
    """Raised when vectors or samples have inconsistent dimensions."""
    pass


class SupportMismatchError(V2XSentinelError):
    """Raised when two distributions do not share the same support."""
    pass


class ModelVersionError(V2XSentinelError):
    """Raised when a model file carries an unsupported version tag."""
    pass


class CorruptModelError(V2XSentinelError):
    """Raised when a model file cannot be parsed or fails validation."""
    pass


class FilterStateError(V2XSentinelError):
    """Raised when a filter message or the particle weights stop being a distribution."""
    pass


class StreamAlignmentError(V2XSentinelError):
    """Raised when trajectory and graph streams are not time-aligned."""
    pass


class MissingMessageError(V2XSentinelError):
    """Raised when a snapshot lacks the π/λ messages for a modality."""

    def __init__(self, frame: int, modality: str):
        self.frame = frame
        super().__init__(
            f"Faltan mensajes π/λ de la modalidad '{modality}' en el frame {frame}",
            details=f"frame={frame}"
        )


class MissingTruthError(V2XSentinelError):
    """Raised when ground truth is required but absent."""
    pass


class ValidationError(V2XSentinelError):
    """Raised when configuration validation fails."""

    def __init__(self, field_name: str, value, reason: str = None):
        message = f"Validación fallida para '{field_name}': {value}"
        if reason:
            message += f". {reason}"
        super().__init__(message, details=f"{field_name}={value}")


class FileOperationError(V2XSentinelError):
    """Raised when file operations (read/write/import/export) fail."""

    def __init__(self, operation: str, filename: str, reason: str = None):
        message = f"Error en {operation}: {filename}"
        if reason:
            message += f". {reason}"
        super().__init__(message, details=f"{operation} - {filename}")


class PipelineStageError(V2XSentinelError):
    """Wraps an upstream error with the name of the pipeline stage."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"Fallo en la etapa '{stage}': {cause}", details=type(cause).__name__)


class UsageError(V2XSentinelError):
    """Raised when the command line is used incorrectly."""
    pass
