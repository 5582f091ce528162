"""Exception and warning types shared across the package."""


class DimensionError(ValueError):
    """Operand shapes are incompatible with the requested operation."""


class ConfigError(ValueError):
    """A configuration value is out of its valid range."""


class NumericError(ArithmeticError):
    """A computation produced non-finite values."""


class ProbeError(RuntimeError):
    """A finite-difference probe evaluated to a non-finite loss."""


class LabelError(ValueError):
    """A label index is outside the valid class range."""


class DataGenError(RuntimeError):
    """Synthetic data generation could not satisfy its constraints."""


class DatasetFormatError(ValueError):
    """A dataset directory or manifest is malformed."""


class EmptyEvaluationError(ValueError):
    """Metrics were requested from an empty confusion matrix."""


class DegenerateCorrelationError(ValueError):
    """A text-attention weight row summed to zero."""


class CheckpointError(RuntimeError):
    """Base class for checkpoint file problems."""


class CheckpointVersionError(CheckpointError):
    """Checkpoint format version is not supported."""


class CorruptCheckpointError(CheckpointError):
    """Checkpoint payload is truncated or inconsistent with its header."""


class CheckpointShapeError(CheckpointError):
    """Checkpoint tensors do not match the expected configuration."""


class DegenerateInputWarning(UserWarning):
    """An input was degenerate (e.g. zero-norm vector) and a fallback value was used."""
