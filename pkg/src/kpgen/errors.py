"""Exception types shared across the package."""


class KpgenError(Exception):
    """Base class for all errors raised by this package."""


class UsageError(KpgenError):
    """An operation was called with invalid inputs or in an invalid state."""


class ConfigError(KpgenError):
    """A configuration value or a shape implied by it is invalid."""


class NumericError(KpgenError):
    """A numeric invariant was violated (NaN/Inf values, zero probability)."""


class CheckpointError(KpgenError):
    """Base class for checkpoint load failures."""


class CheckpointVersionError(CheckpointError):
    """The file is not a checkpoint of a supported format version."""


class CheckpointTruncatedError(CheckpointError):
    """The file ends before all declared payload bytes."""


class CheckpointShapeError(CheckpointError):
    """A stored array does not match the shape declared in the directory."""
