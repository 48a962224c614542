"""Exception types shared across the package."""


class OnairError(Exception):
    """Base class for errors raised by onair."""


class ConfigError(OnairError, ValueError):
    """An experiment configuration is malformed or violates an invariant."""


class TensorFormatError(OnairError, OSError):
    """A tensor file is malformed. ``offset`` is the byte where reading failed."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class NumericalDegeneracyError(OnairError, ArithmeticError):
    """A linear system that must be invertible is singular."""
