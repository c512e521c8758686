"""Exception hierarchy shared by every module."""


class CrossQuantError(Exception):
    """Base class for all library errors."""


class TensorFormatError(CrossQuantError):
    """A tensor file does not follow the container layout."""


class TensorValidationError(CrossQuantError):
    """A matrix holds a non-finite value."""


class TensorSizeError(CrossQuantError):
    """Declared dimensions disagree with the data."""


class ConfigError(CrossQuantError):
    """A scheme or generator was configured with invalid parameters."""


class DegenerateBaselineError(CrossQuantError):
    """Relative error requested against an all-zero reference product."""
