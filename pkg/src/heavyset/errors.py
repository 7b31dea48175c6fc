"""Exception types shared across the package."""


class HeavysetError(Exception):
    """Base class for all package errors."""


class UnsupportedFieldError(HeavysetError):
    """Raised when two scalars live in different quadratic fields."""


class SpaceMismatchError(HeavysetError):
    """Raised when points or sets from different group spaces are combined."""


class PreconditionError(HeavysetError):
    """Raised when an operation's input contract is violated."""


class ConfigError(HeavysetError):
    """Raised for malformed or incomplete experiment configuration."""


class ResourceCapError(HeavysetError):
    """Raised when a grid, horizon or construction exceeds its configured cap."""
