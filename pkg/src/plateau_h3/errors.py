"""Exception hierarchy shared by all solver layers."""


class PlateauError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(PlateauError, ValueError):
    """An argument lies outside its documented range."""


class DegeneracyError(PlateauError):
    """A geometric object lost a defining property (monotonicity, immersion, ...)."""


class SolverError(PlateauError):
    """An iterative solve failed to converge."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class SingularityError(SolverError):
    """The linearized conformality operator is numerically singular."""


class StagnationError(SolverError):
    """Backtracking shrank the damping below its floor without progress."""
