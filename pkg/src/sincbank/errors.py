"""Exception types shared across the package."""


class SincbankError(Exception):
    """Base class for errors raised by this package."""


class InvalidParameterError(SincbankError, ValueError):
    """A value violates a documented parameter constraint."""


class UnsupportedConfigurationError(SincbankError, ValueError):
    """A combination of otherwise-valid options is not supported."""


class SingularOperatorError(SincbankError, RuntimeError):
    """A linear operator required for decoding is singular or empty."""


class NumericFailureError(SincbankError, RuntimeError):
    """A non-finite value appeared in a numeric stage; message names the stage."""


class AudioFormatError(SincbankError, ValueError):
    """An audio file could not be parsed or uses an unsupported sample format."""


class CheckpointError(SincbankError, ValueError):
    """A checkpoint file is missing, malformed, or from an unknown version."""
