"""Exception types shared across the package."""


class ConvFactorError(Exception):
    """Base class for every error raised by this package."""


class ShapeError(ConvFactorError, ValueError):
    """An array has the wrong number of axes or inconsistent extents."""


class ValidationError(ConvFactorError, ValueError):
    """A parameter value violates an operation's contract."""


class NumericError(ConvFactorError, ValueError):
    """Numeric breakdown: non-finite inputs or a failed tolerance."""


class FormatError(ConvFactorError, ValueError):
    """A binary tensor file or a manifest cannot be decoded."""


class DescriptorError(ValidationError):
    """A model descriptor failed to parse; the message carries the line number."""
