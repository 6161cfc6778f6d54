"""Exception hierarchy shared by all melstream modules."""


class MelstreamError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(MelstreamError):
    """Invalid or inconsistent configuration values."""


class InputError(MelstreamError):
    """Caller passed data of the wrong shape, sign, or domain."""


class DataError(MelstreamError):
    """Input data is numerically invalid (NaN/Inf) or unreadable."""


class FormatError(DataError):
    """A binary file does not conform to its declared format."""


class TruncatedFileError(FormatError):
    """File ended before the declared payload was complete."""


class VersionError(FormatError):
    """File format version is not supported."""


class SpecMismatchError(MelstreamError):
    """Weight bundle and network spec do not describe the same model."""


class VerificationError(MelstreamError):
    """A streaming/offline equivalence or causality check failed."""
