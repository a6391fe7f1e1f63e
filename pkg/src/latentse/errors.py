"""Exception types shared across the package."""


class LatentSeError(Exception):
    """Base class for all package errors."""


class InvalidInput(LatentSeError, ValueError):
    """An argument violates an operation's precondition."""


class DataError(LatentSeError):
    """A corpus record or file is missing or unreadable."""


class FormatError(LatentSeError):
    """A serialized artifact does not match its declared layout."""


class TrainingError(LatentSeError):
    """Training diverged (NaN loss or similar)."""


class StateError(LatentSeError):
    """An object is used in a state its contract forbids."""


class ConfigError(LatentSeError):
    """A run configuration is inconsistent or references missing artifacts."""
