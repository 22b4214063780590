"""Exception hierarchy shared across the package.

The split between :class:`ValidationError` and :class:`NumericalError`
mirrors the CLI exit codes: bad inputs / malformed files exit 2, numerical
failures (underflow, non-finite values) exit 3.
"""


class OtfuseError(Exception):
    """Base class for all package errors."""


class ValidationError(OtfuseError):
    """Invalid shapes, values, or configuration."""


class DataFormatError(ValidationError):
    """A file on disk could not be parsed into the expected structure."""


class CheckpointFormatError(DataFormatError):
    """Checkpoint payload is corrupt or disagrees with its own specs."""

    code = "corrupt_payload"

    def __init__(self, message: str, code: str = "corrupt_payload"):
        super().__init__(message)
        self.code = code


class CheckpointVersionError(DataFormatError):
    """Checkpoint carries an unrecognized format version."""

    code = "unknown_version"


class NumericalError(OtfuseError):
    """A computation produced or would produce non-finite values."""


class SinkhornUnderflowError(NumericalError):
    """The Sinkhorn kernel underflowed; the regularization is too small."""
