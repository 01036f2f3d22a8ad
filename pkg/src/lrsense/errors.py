"""Exception types raised by the library."""


class DimensionError(ValueError):
    """Shapes of the inputs are inconsistent."""


class SingularAlignmentError(ArithmeticError):
    """The alignment iterate became numerically singular."""


class DivergenceError(FloatingPointError):
    """A gradient iterate became non-finite.

    Attributes
    ----------
    iteration : int
        Index of the first iterate that contained a non-finite entry.
    """

    def __init__(self, iteration, message=None):
        self.iteration = int(iteration)
        super().__init__(message or f"non-finite iterate at t={self.iteration}")


class TraceLengthError(ValueError):
    """A trace is too short for the requested statistic."""


class ConfigError(ValueError):
    """An experiment configuration is malformed."""
