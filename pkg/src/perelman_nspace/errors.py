"""Exception hierarchy shared by all modules."""


class NSpaceError(Exception):
    """Base class for every error raised by the package."""


class TimeRangeError(NSpaceError, ValueError):
    pass


class ConfigurationError(NSpaceError, ValueError):
    pass


class UnsupportedRepresentationError(NSpaceError, TypeError):
    pass


class PositivityError(NSpaceError, ValueError):
    pass


class LevelSetError(NSpaceError, RuntimeError):
    """Newton failure or loss of monotonicity while solving for a level set.

    ``worst_index`` is the flat grid index of the offending point and
    ``worst_value`` the residual (or derivative) observed there.
    """

    def __init__(self, message, worst_index=None, worst_value=None):
        super().__init__(message)
        self.worst_index = worst_index
        self.worst_value = worst_value


class QuadratureError(NSpaceError, RuntimeError):
    pass


class TruncationError(NSpaceError, RuntimeError):
    """The exponentially small tail of the volume integral is not negligible."""


class DegenerateFitError(NSpaceError, ArithmeticError):
    """Deviations are at round-off level, so no rate can be fitted."""
