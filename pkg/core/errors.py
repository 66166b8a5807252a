"""Exception hierarchy for the Ehrenfest workbench."""


class WorkbenchError(Exception):
    """Base class for all workbench failures."""


class ConfigError(WorkbenchError):
    """Scenario configuration could not be parsed or validated."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class ExactnessError(WorkbenchError):
    """An identity that must hold exactly in rational arithmetic failed."""


class SampleRejectedError(WorkbenchError):
    """Orthogonality samples were requested at times where it is not claimed."""

    def __init__(self, message: str, samples: list):
        self.samples = list(samples)
        super().__init__(message)


class ResonanceError(WorkbenchError):
    """No candidate time gives a nonzero overlap with a bump."""


class OverlapError(WorkbenchError):
    """An interval rule produced intervals that are not pairwise disjoint."""


class NumericalError(WorkbenchError):
    """Non-finite values, wraparound, or another numerical breakdown."""


class SolverConvergenceError(NumericalError):
    """The iterative Crank-Nicolson solve did not reach its residual target."""


class GridTooCoarseError(NumericalError):
    """The grid cannot resolve the bumps of the exact system."""


class GridTooLargeError(NumericalError):
    """An aligned grid for the requested bumps would exceed the node budget."""


class HermiticityError(NumericalError):
    """A quadratic form that must be real carried a significant imaginary part."""
