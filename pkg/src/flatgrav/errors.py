"""Exception hierarchy for the flatgrav package."""


class FlatgravError(Exception):
    """Base class for all package errors."""


class ModelError(FlatgravError):
    """A convex model violates its structural requirements."""


class ExtrapolationError(FlatgravError):
    """A tabulated model was evaluated outside its table."""


class GridError(FlatgravError):
    """Field grids are malformed or incompatible."""


class BoxSizeError(FlatgravError):
    """A planar field's support sits too close to the box edge."""


class AccuracyError(FlatgravError):
    """A quadrature cannot deliver its accuracy contract for this input."""


class ConvergenceError(FlatgravError):
    """An iteration failed to converge (divergence or iteration cap)."""


class SamplingError(FlatgravError):
    """Rejection sampling degenerated (acceptance rate too low)."""


class FormatError(FlatgravError):
    """A binary or CSV artifact does not match its declared format."""


class ConfigError(FlatgravError):
    """A run configuration failed validation.

    Carries the full list of messages so callers can report every problem
    at once instead of the first one.
    """

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
