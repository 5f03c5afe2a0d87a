"""Exception hierarchy shared across the toolkit.

Two families matter for the CLI exit-code contract: ValidationError and its
subclasses map to exit code 1, FeatureFileError and plain I/O problems map
to exit code 2.
"""


class OODKitError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(OODKitError, ValueError):
    """Invalid argument or precondition violation."""


class ConfigError(ValidationError):
    """Missing or inconsistent configuration (e.g. decision threshold unset)."""


class FitError(ValidationError):
    """Detector fitting failed (missing blocks, singular covariance, ...)."""


class TrainingError(OODKitError):
    """Optimization diverged or failed to make progress."""


class InsufficientAlphabetError(ValidationError):
    """No sufficient representation map exists at the requested alphabet size."""


class FeatureFileError(OODKitError):
    """Base class for feature-file format problems."""


class MagicError(FeatureFileError):
    """File does not start with the expected magic bytes."""


class VersionError(FeatureFileError):
    """Unsupported format version."""


class SizeMismatchError(FeatureFileError):
    """Declared block sizes do not match the payload byte length."""


class DigestError(FeatureFileError):
    """Sidecar digest does not match the payload hash."""


class NonFinitePayloadError(FeatureFileError):
    """Payload contains NaN or infinite values."""


class SidecarError(FeatureFileError):
    """Sidecar metadata file missing or malformed."""


class FileMissingError(FeatureFileError):
    """A manifest or argument references a file that does not exist."""
