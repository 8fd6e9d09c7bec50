"""Exception hierarchy for the engine.

Every error raised on a public surface derives from ViperaError so callers
(and the CLI) can distinguish our failures from programming bugs.
"""


class ViperaError(Exception):
    """Base class for all engine errors."""


class ShapeError(ViperaError):
    """Operand shapes are incompatible with the requested operation."""


class CapacityError(ViperaError):
    """A batch exceeds a configured capacity (e.g. frames beyond the positional table)."""


class ConstraintError(ViperaError):
    """A learned-parameter constraint is violated (e.g. log sigma <= 0)."""


class ConfigError(ViperaError):
    """Invalid or inconsistent configuration."""


class DatasetError(ViperaError):
    """The dataset/manifest cannot support the requested operation."""


class EmptyInputError(ViperaError):
    """An operation received an empty collection where at least one item is required."""


class UndefinedMetricError(ViperaError):
    """A metric is undefined for the given records (e.g. AUC on a single class)."""


class StoreError(ViperaError):
    """Base class for persistence-format errors."""


class BadMagicError(StoreError):
    """File does not start with the expected magic bytes."""


class BadVersionError(StoreError):
    """File declares an unsupported format version."""


class TruncatedFileError(StoreError):
    """Declared sizes do not match the actual byte length."""


class NonFinitePayloadError(StoreError):
    """Payload contains NaN or infinite values."""
