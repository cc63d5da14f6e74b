"""Exception types raised across the toolkit."""


class DomainError(ValueError):
    """Input lies outside an operation's mathematical domain."""


class ConfigError(ValueError):
    """Invalid configuration (grid, window, scene or block parameters)."""


class DimensionError(ValueError):
    """Tensor shapes are inconsistent with an operation's contract."""


class FormatError(ValueError):
    """Malformed binary or text file.

    ``offset`` is the byte offset at which decoding failed, when known.
    """

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset
