"""Newton iteration over a residual with an analytic sparse Jacobian."""

from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from llbarfem.errors import NewtonConvergenceError
from llbarfem.logging import get_logger
from llbarfem.sparse import SparseMatrix, solve_direct

logger = get_logger(__name__)

Evaluator = Callable[[np.ndarray], tuple[np.ndarray, SparseMatrix]]
LinearSolve = Callable[[SparseMatrix, np.ndarray], np.ndarray]


@dataclass
class NewtonResult:
    solution: np.ndarray
    iterations: int
    residuals: list[float] = field(default_factory=list)


def newton_solve(
    evaluate: Evaluator,
    guess: np.ndarray,
    tol: float = 1e-10,
    maxit: int = 25,
    linear_solve: LinearSolve = solve_direct,
) -> NewtonResult:
    """Solve R(x) = 0 by Newton's method.

    Stops once ``||R(x)||_2 <= tol * max(1, ||R(guess)||_2)``.

    Args:
        evaluate: Returns the residual and its Jacobian at a point
        guess: Initial iterate
        tol: Mixed absolute/relative tolerance
        maxit: Maximum number of Newton updates
        linear_solve: Solver for the Jacobian systems

    Returns:
        NewtonResult with the solution, the number of updates and the residual trace

    Raises:
        NewtonConvergenceError: Tolerance not reached after maxit updates
        LinearSolverError: A Jacobian solve failed
    """
    x = np.array(guess, dtype=float)
    residual, jacobian = evaluate(x)
    norms = [float(np.linalg.norm(residual))]
    bound = tol * max(1.0, norms[0])

    for iteration in range(1, maxit + 1):
        if norms[-1] <= bound:
            break
        x = x - linear_solve(jacobian, residual)
        residual, jacobian = evaluate(x)
        norms.append(float(np.linalg.norm(residual)))
        logger.debug("newton_iteration", iteration=iteration, residual=norms[-1])
        if not np.isfinite(norms[-1]):
            break

    if not norms[-1] <= bound:
        logger.error("newton_failed", residuals=norms, bound=bound)
        raise NewtonConvergenceError("Newton iteration did not converge", norms)

    return NewtonResult(solution=x, iterations=len(norms) - 1, residuals=norms)
