"""
Error hierarchy shared by the library and the command-line pipeline.

Each top-level class carries the process exit code the CLI reports for it.
"""


class PipelineError(Exception):
    """Base class for every error raised on purpose by this package"""

    exit_code = 1


class ConfigError(PipelineError):
    """Invalid run configuration or command-line arguments"""

    exit_code = 2


class DataError(PipelineError):
    """Unreadable, malformed or inconsistent input data"""

    exit_code = 3


class NumericalInstabilityError(PipelineError):
    """A parameter vector picked up NaN or Inf during training"""

    exit_code = 4


class RejectedInputError(DataError, ValueError):
    """Feature vector incompatible with the model (index out of range, negative count)"""


class EmptyBatchError(DataError, ValueError):
    """A loss or gradient was requested for an empty batch"""


class DataFormatError(DataError, ValueError):
    """A JSONL record could not be parsed or validated"""

    def __init__(self, message, line_number=None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class SplitError(DataError, ValueError):
    """Unknown platform name or a platform assigned to two roles"""


class DegenerateToyError(PipelineError, ValueError):
    """Cosine experiment produced a zero vector, so the cosine is undefined"""


class CheckpointError(DataError):
    """Base class for unreadable checkpoint files"""


class BadMagicError(CheckpointError):
    pass


class VersionMismatchError(CheckpointError):
    pass


class TruncatedCheckpointError(CheckpointError):
    pass


class LengthMismatchError(CheckpointError):
    pass


class SpecMismatchError(CheckpointError):
    """Checkpoint dimensions disagree with the requested model configuration"""
