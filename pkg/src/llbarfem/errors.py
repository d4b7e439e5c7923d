"""Exception hierarchy and the exit codes the command line maps them to."""

EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_SOLVER_FAILURE = 3
EXIT_IO_FAILURE = 4


class LLBarError(Exception):
    """Base class for every error raised by llbarfem."""

    exit_code: int = 1


class ConfigError(LLBarError):
    """Invalid configuration: bad key, missing key or unusable value."""

    exit_code = EXIT_CONFIG_ERROR

    def __init__(self, message: str, key: str | None = None) -> None:
        super().__init__(message)
        self.key = key


class UnknownKeyError(ConfigError):
    """A configuration key that the schema does not know."""


class MissingKeyError(ConfigError):
    """A required configuration key was not given and has no default."""


class InvalidValueError(ConfigError):
    """A configuration value could not be parsed or is out of range."""


class AxisNotUnitError(ConfigError):
    """The anisotropy axis is not a unit vector."""


class SolverError(LLBarError):
    """A linear or nonlinear solve did not reach its tolerance."""

    exit_code = EXIT_SOLVER_FAILURE


class LinearSolverError(SolverError):
    """Krylov or direct solve failure."""

    def __init__(self, message: str, residual: float, iterations: int = 0) -> None:
        super().__init__(f"{message} (residual={residual:.3e}, iterations={iterations})")
        self.residual = residual
        self.iterations = iterations


class NewtonConvergenceError(SolverError):
    """Newton iteration exceeded its iteration budget."""

    def __init__(self, message: str, residuals: list[float]) -> None:
        last = residuals[-1] if residuals else float("nan")
        super().__init__(f"{message} after {len(residuals) - 1} iterations (residual={last:.3e})")
        self.residuals = residuals


class StepError(SolverError):
    """A time step failed; wraps the underlying solver error."""

    def __init__(self, step: int, time: float, cause: Exception) -> None:
        super().__init__(f"step {step} (t={time:.6g}) failed: {cause}")
        self.step = step
        self.time = time
        self.cause = cause


class OutputError(LLBarError):
    """Writing or reading an output file failed."""

    exit_code = EXIT_IO_FAILURE

    def __init__(self, message: str, path: str) -> None:
        super().__init__(f"{message}: {path}")
        self.path = path


class MeshMismatchError(LLBarError, ValueError):
    """Fields or meshes that must be compatible (same space, nested) are not."""
