"""Exception hierarchy. Each class carries an exit code used by the CLI."""


class HypoEstimError(Exception):
    exit_code = 1


class InputError(HypoEstimError, ValueError):
    """Malformed user input: bad shapes, non-monotone time, invalid parameters."""

    exit_code = 3


class UnsupportedModelError(HypoEstimError, ValueError):
    exit_code = 3


class SimulationDivergedError(HypoEstimError, FloatingPointError):
    """A simulated path left the |q| + |p| <= 1e8 envelope."""

    exit_code = 5


class NumericalError(HypoEstimError, ArithmeticError):
    exit_code = 4


class IllConditionedDesignError(NumericalError):
    """Drift posterior precision is singular or not positive definite."""


class FactorizationError(NumericalError):
    """Banded Cholesky of the path precision failed."""


class StepSizeTooLargeError(NumericalError):
    """The sigma Langevin integrator blew up; reduce ds."""


class GibbsError(NumericalError):
    """A sampler failed inside the Gibbs loop; ``iteration`` records where."""

    def __init__(self, iteration: int, cause: Exception):
        super().__init__(f"Gibbs iteration {iteration}: {cause}")
        self.iteration = iteration
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", NumericalError.exit_code)
