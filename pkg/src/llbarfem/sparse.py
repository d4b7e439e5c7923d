"""Compressed-row sparse matrices and the linear solvers used by the schemes.

Matrices are plain ``scipy.sparse.csr_matrix`` objects in canonical form
(sorted column indices, duplicates summed). Construction from triplets is
made independent of triplet order so that reruns are bit-identical.
"""

from collections.abc import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from llbarfem.errors import LinearSolverError
from llbarfem.logging import get_logger

logger = get_logger(__name__)

SparseMatrix = sp.csr_matrix

# Extra restarts granted when the Krylov recurrence residual and the true
# residual disagree at the tolerance.
_KRYLOV_RESTARTS = 3


def from_triplets(
    rows: int,
    cols: int,
    triplets: Iterable[tuple[int, int, float]] | Sequence[Sequence[float]],
) -> SparseMatrix:
    """Build a canonical CSR matrix from (i, j, v) triplets.

    Duplicates are summed. Triplets are sorted by (row, column, value) before
    summation, so any permutation of the same triplets gives a bit-identical
    matrix.

    Args:
        rows: Number of rows
        cols: Number of columns
        triplets: Iterable of (i, j, v)

    Returns:
        Canonical CSR matrix

    Raises:
        IndexError: An index lies outside the matrix shape
    """
    data = np.asarray(list(triplets), dtype=float).reshape(-1, 3)
    i = data[:, 0].astype(np.int64)
    j = data[:, 1].astype(np.int64)
    v = data[:, 2]
    _check_indices(rows, cols, i, j)

    order = np.lexsort((v, j, i))
    i, j, v = i[order], j[order], v[order]
    return _compress_sorted(rows, cols, i, j, v)


def from_coo(rows: int, cols: int, i: np.ndarray, j: np.ndarray, v: np.ndarray) -> SparseMatrix:
    """Build a canonical CSR matrix from coordinate arrays in a fixed order.

    Used by the element assembly loops, whose triplet order is already
    deterministic (element-major); duplicates are summed in that order.
    """
    i = np.asarray(i, dtype=np.int64).ravel()
    j = np.asarray(j, dtype=np.int64).ravel()
    v = np.asarray(v, dtype=float).ravel()
    _check_indices(rows, cols, i, j)
    order = np.lexsort((j, i))
    return _compress_sorted(rows, cols, i[order], j[order], v[order])


def _check_indices(rows: int, cols: int, i: np.ndarray, j: np.ndarray) -> None:
    if i.size and (i.min() < 0 or i.max() >= rows or j.min() < 0 or j.max() >= cols):
        raise IndexError(f"triplet index out of range for a {rows}x{cols} matrix")


def _compress_sorted(
    rows: int, cols: int, i: np.ndarray, j: np.ndarray, v: np.ndarray
) -> SparseMatrix:
    if i.size == 0:
        return sp.csr_matrix((rows, cols))
    new_entry = np.ones(i.size, dtype=bool)
    new_entry[1:] = (i[1:] != i[:-1]) | (j[1:] != j[:-1])
    starts = np.flatnonzero(new_entry)
    values = np.add.reduceat(v, starts)
    row_idx = i[starts]
    col_idx = j[starts]
    indptr = np.zeros(rows + 1, dtype=np.int64)
    np.add.at(indptr, row_idx + 1, 1)
    indptr = np.cumsum(indptr)
    matrix = sp.csr_matrix((values, col_idx, indptr), shape=(rows, cols))
    matrix.has_sorted_indices = True
    return matrix


def spmv(matrix: SparseMatrix, x: np.ndarray) -> np.ndarray:
    """Sparse matrix-vector product y = A x.

    Raises:
        ValueError: len(x) differs from the number of columns
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (matrix.shape[1],):
        raise ValueError(f"vector of length {x.shape} does not match {matrix.shape[1]} columns")
    return matrix @ x


def jacobi_preconditioner(matrix: SparseMatrix) -> spla.LinearOperator:
    """Diagonal (Jacobi) preconditioner; zero diagonal entries are left unscaled."""
    diag = matrix.diagonal()
    inv = np.ones_like(diag)
    nonzero = diag != 0.0
    inv[nonzero] = 1.0 / diag[nonzero]
    return spla.LinearOperator(matrix.shape, matvec=lambda r: inv * r, dtype=float)


def solve_krylov(
    matrix: SparseMatrix,
    b: np.ndarray,
    tol: float = 1e-12,
    maxit: int = 1000,
    guess: np.ndarray | None = None,
    method: str = "bicgstab",
) -> np.ndarray:
    """Solve A x = b with Jacobi-preconditioned BiCGStab (or restarted GMRES).

    On success ``||A x - b||_2 <= tol * max(1, ||b||_2)`` holds for the true
    residual.

    Args:
        matrix: Square sparse matrix
        b: Right-hand side
        tol: Mixed absolute/relative residual tolerance
        maxit: Maximum number of Krylov iterations
        guess: Initial guess (zero if omitted)
        method: "bicgstab" or "gmres"

    Returns:
        Solution vector

    Raises:
        LinearSolverError: Residual contract not met within maxit iterations
    """
    if matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"Krylov solve needs a square matrix, got {matrix.shape}")
    if tol <= 0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    b = np.asarray(b, dtype=float)
    bound = tol * max(1.0, float(np.linalg.norm(b)))
    x = np.zeros_like(b) if guess is None else np.array(guess, dtype=float)
    if float(np.linalg.norm(b - matrix @ x)) <= bound:
        return x

    preconditioner = jacobi_preconditioner(matrix)
    iterations = 0

    def count(_: np.ndarray) -> None:
        nonlocal iterations
        iterations += 1

    residual = float("inf")
    for _ in range(_KRYLOV_RESTARTS + 1):
        remaining = max(1, maxit - iterations)
        if method == "gmres":
            x, _info = spla.gmres(
                matrix,
                b,
                x0=x,
                rtol=tol,
                atol=tol,
                restart=min(50, matrix.shape[0]),
                maxiter=remaining,
                M=preconditioner,
                callback=count,
                callback_type="pr_norm",
            )
        elif method == "bicgstab":
            x, _info = spla.bicgstab(
                matrix, b, x0=x, rtol=tol, atol=tol, maxiter=remaining, M=preconditioner, callback=count
            )
        else:
            raise ValueError(f"unknown Krylov method {method!r}")

        residual = float(np.linalg.norm(b - matrix @ x))
        if residual <= bound and np.all(np.isfinite(x)):
            logger.debug("krylov_converged", method=method, iterations=iterations, residual=residual)
            return x
        if iterations >= maxit:
            break

    logger.error("krylov_failed", method=method, iterations=iterations, residual=residual, bound=bound)
    raise LinearSolverError(f"{method} did not converge", residual=residual, iterations=iterations)


def solve_direct(matrix: SparseMatrix, b: np.ndarray) -> np.ndarray:
    """Solve A x = b with a sparse LU factorisation.

    Raises:
        LinearSolverError: The matrix is singular or the solution is not finite
    """
    b = np.asarray(b, dtype=float)
    try:
        lu = spla.splu(sp.csc_matrix(matrix))
        x = lu.solve(b)
    except RuntimeError as e:
        logger.error("direct_solve_failed", error=str(e))
        raise LinearSolverError(f"sparse LU failed: {e}", residual=float("inf")) from e
    if not np.all(np.isfinite(x)):
        raise LinearSolverError("sparse LU produced a non-finite solution", residual=float("inf"))
    return x


def block_diagonal_components(scalar: SparseMatrix, block: np.ndarray | None = None) -> SparseMatrix:
    """Lift an N x N scalar form to the interleaved 3N x 3N vector layout.

    With ``block = I3`` (default) the result applies ``scalar`` to every
    component independently; any 3x3 ``block`` gives ``scalar ⊗ block``.
    """
    block = np.eye(3) if block is None else np.asarray(block, dtype=float)
    return sp.csr_matrix(sp.kron(scalar, block, format="csr"))
