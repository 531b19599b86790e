"""Exception types raised across the package."""


class InvalidParameterError(ValueError):
    """An argument is outside the domain an operation accepts."""


class DecodeError(RuntimeError):
    """A receiver's effective decoding matrix lacks full column rank."""
