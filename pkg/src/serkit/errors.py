"""Exception hierarchy shared across the toolkit."""


class SerkitError(Exception):
    """Base class for all toolkit errors."""


class DimensionError(SerkitError):
    """Shapes or declared dimensions do not agree."""


class ConfigError(SerkitError):
    """Invalid configuration value or unknown override key."""


class DataError(SerkitError):
    """Invalid input data (labels, manifests, audio, transcripts)."""


class StateError(SerkitError):
    """Operation called in an invalid state (e.g. backward without forward)."""


class NumericError(SerkitError):
    """Non-finite values where finite ones are required."""


class ContainerFormatError(SerkitError):
    """Base class for embedding-container format violations."""


class BadMagicError(ContainerFormatError):
    """File does not start with the expected magic bytes."""


class TruncatedError(ContainerFormatError):
    """File is shorter than its header declares."""


class ChecksumError(ContainerFormatError):
    """Payload CRC does not match the stored checksum."""
