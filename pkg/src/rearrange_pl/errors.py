"""Exception types shared across the package."""


class RearrangeLabError(Exception):
    """Base class for all package-specific errors."""


class GridMismatchError(RearrangeLabError, ValueError):
    """Two grid-carried objects were combined but live on different grids."""


class GridBoundsError(RearrangeLabError, ValueError):
    """A geometric operation produced points outside the grid box."""


class DomainError(RearrangeLabError, ValueError):
    """A numeric argument lies outside the mathematical domain of an operation."""


class LadderError(RearrangeLabError, ValueError):
    """A threshold ladder could not be built or masks are not nested."""


class FileFormatError(RearrangeLabError, ValueError):
    """A grid-function or mask file failed validation on read."""


class PreconditionError(RearrangeLabError, ValueError):
    """A chain hypothesis failed; carries a witness describing where."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class ConfigError(RearrangeLabError, ValueError):
    """An experiment configuration is malformed; names the offending field."""

    def __init__(self, message, field=None):
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)
        self.field = field
