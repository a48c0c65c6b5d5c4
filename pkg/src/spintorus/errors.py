"""Exception types shared across the package."""


class SpinTorusError(Exception):
    """Base class for all package-specific errors."""


class UnsupportedDimension(SpinTorusError):
    """Raised when an operation is asked for a dimension it does not support."""


class SolverDidNotConverge(SpinTorusError):
    """Eigensolver failed to deliver verified eigenpairs.

    Carries the iteration count and the best residual reached so callers can
    report or retry with different settings.
    """

    def __init__(self, message: str, iterations: int, best_residual: float):
        super().__init__(f"{message} (iterations={iterations}, best_residual={best_residual:.3e})")
        self.iterations = iterations
        self.best_residual = best_residual


class EmptySupport(SpinTorusError):
    """The spinor support mask is empty; normalized quantities are undefined."""


class SupportHole(SpinTorusError):
    """The spinor vanishes somewhere, violating a nowhere-vanishing hypothesis."""


class PositivityError(SpinTorusError):
    """A quantity required to be strictly positive is not."""


class ScalarCurvatureZero(SpinTorusError):
    """Scalar curvature vanishes on the support where a formula divides by it."""


class ConfigError(SpinTorusError):
    """Invalid experiment configuration; message carries field-level details."""
