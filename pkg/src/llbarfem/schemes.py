"""Fully discrete mixed schemes for the LLBar system.

Each step solves for the stacked unknowns x = [U; Y] (6N values: the new
spin field and the effective field) with Newton's method. Writing M, K for
the componentwise mass and stiffness matrices, C(w) for the cross-product
form and A for the anisotropy form, the residuals are

semi-implicit Euler::

    R1 = M (U - U^n) / k - lambda_r M Y - lambda_e K Y + gamma C(u^n) Y
    R2 = M Y + K U - kappa mu M U^n + kappa <|U|^2 U, .> + beta A U

(the Bloch variant uses kappa mu M U in R2), and Crank-Nicolson::

    R1 = M (U - U^n) / k - lambda_r M Y - lambda_e K Y + gamma C(u_hat) Y
    R2 = M Y + K U_m - kappa mu M U_m + kappa <psi(u^n, U), .> + beta A U_m

with U_m = (U + U^n)/2 and u_hat = (3 u^n - u^{n-1})/2. The CN start-up
step replaces u_hat by the unknown midpoint U_m.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from llbarfem.errors import SolverError, StepError
from llbarfem.fem import FeSpace, VectorField, norm
from llbarfem.logging import get_logger
from llbarfem.models import LinearSolverKind, ModelParams, SchemeConfig, SchemeKind, StepRecord
from llbarfem.newton import LinearSolve, NewtonResult, newton_solve
from llbarfem.physics import (
    anisotropy_matrix,
    cross_matrix,
    cubic_jacobian,
    cubic_load,
    effective_field,
    energy,
    psi_jacobian,
    psi_load,
)
from llbarfem.sparse import SparseMatrix, solve_direct, solve_krylov

logger = get_logger(__name__)


@dataclass(frozen=True, eq=False)
class DiscreteOperators:
    """Assembled linear forms shared by every step on one space."""

    space: FeSpace
    params: ModelParams

    @cached_property
    def mass(self) -> SparseMatrix:
        return self.space.mass_blocks

    @cached_property
    def stiffness(self) -> SparseMatrix:
        return self.space.stiffness_blocks

    @cached_property
    def anisotropy(self) -> SparseMatrix:
        return anisotropy_matrix(self.params, self.space.mass)

    @cached_property
    def field_operator(self) -> SparseMatrix:
        """Part of dR1/dY that does not depend on the solution: -lambda_r M - lambda_e K."""
        p = self.params
        return sp.csr_matrix(-p.lambda_r * self.mass - p.lambda_e * self.stiffness)


@dataclass(frozen=True)
class StepperState:
    """Solution after ``n`` steps of size ``k``."""

    n: int
    t: float
    u_curr: VectorField
    h_last: VectorField
    energy_curr: float
    u_prev: VectorField | None = None
    newton_iters_last: int = 0
    residual_last: float = 0.0
    dissipated_last: float = 0.0


def initial_state(ops: DiscreteOperators, u0: VectorField) -> StepperState:
    """State at t = 0; H is the discrete effective field of u0."""
    return StepperState(
        n=0,
        t=0.0,
        u_curr=u0,
        h_last=effective_field(ops.space, ops.params, u0),
        energy_curr=energy(ops.space, ops.params, u0),
    )


def _linear_solver(cfg: SchemeConfig) -> LinearSolve:
    if cfg.linear_solver == LinearSolverKind.KRYLOV:
        return lambda a, b: solve_krylov(a, b, tol=cfg.linear_tol, maxit=cfg.linear_max_iter, method="gmres")
    return solve_direct


def _split(ops: DiscreteOperators, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = ops.space.n_dofs
    return x[:n], x[n:]


def _solve(
    ops: DiscreteOperators, cfg: SchemeConfig, evaluate, u_guess: VectorField, h_guess: VectorField
) -> tuple[VectorField, VectorField, NewtonResult]:
    guess = np.concatenate([u_guess.coeffs, h_guess.coeffs])
    result = newton_solve(
        evaluate,
        guess,
        tol=cfg.newton_tol,
        maxit=cfg.newton_max_iter,
        linear_solve=_linear_solver(cfg),
    )
    u_new, h_new = _split(ops, result.solution)
    return VectorField(ops.space, u_new.copy()), VectorField(ops.space, h_new.copy()), result


def dissipated_energy(h: VectorField, k: float, p: ModelParams) -> float:
    """k lambda_r ||H||^2 + k lambda_e ||grad H||^2."""
    space = h.space
    return k * (p.lambda_r * norm(space, h, "L2") ** 2 + p.lambda_e * norm(space, h, "H1_semi") ** 2)


def dissipation_residual(
    e_prev: float, e_next: float, h: VectorField, k: float, p: ModelParams, scheme: SchemeKind | str
) -> float:
    """r = E(u^{n+1}) - E(u^n) + k lambda_r ||H||^2 + k lambda_e ||grad H||^2.

    Euler schemes guarantee r <= 0; Crank-Nicolson gives r = 0 up to the
    solver tolerance. The formula is the same for both.
    """
    SchemeKind(scheme)
    return e_next - e_prev + dissipated_energy(h, k, p)


def _finish(
    ops: DiscreteOperators,
    state: StepperState,
    k: float,
    u_new: VectorField,
    h_new: VectorField,
    result: NewtonResult,
    u_prev: VectorField | None,
    dissipated: float | None = None,
) -> StepperState:
    n = state.n + 1
    new = StepperState(
        n=n,
        t=n * k,
        u_curr=u_new,
        h_last=h_new,
        energy_curr=energy(ops.space, ops.params, u_new),
        u_prev=u_prev,
        newton_iters_last=result.iterations,
        residual_last=result.residuals[-1],
        dissipated_last=dissipated_energy(h_new, k, ops.params) if dissipated is None else dissipated,
    )
    logger.debug(
        "step_complete",
        step=n,
        time=new.t,
        energy=new.energy_curr,
        newton_iters=result.iterations,
        residual=result.residuals[-1],
    )
    return new


def euler_step(
    state: StepperState, p: ModelParams, ops: DiscreteOperators, cfg: SchemeConfig
) -> StepperState:
    """One semi-implicit Euler step (``euler`` or ``euler_bloch``).

    Raises:
        NewtonConvergenceError: Newton did not reach the tolerance
        LinearSolverError: A Jacobian solve failed
    """
    k = cfg.k
    space = ops.space
    bloch = cfg.scheme == SchemeKind.EULER_BLOCH
    u_n = state.u_curr.coeffs
    mass, stiffness = ops.mass, ops.stiffness

    top = sp.hstack([mass / k, ops.field_operator + p.gamma * cross_matrix(space, state.u_curr)])
    r1_fixed = top.tocsr()
    linear_21 = stiffness + p.beta * ops.anisotropy
    if bloch:
        linear_21 = linear_21 - p.kappa * p.mu * mass
        explicit = np.zeros_like(u_n)
    else:
        explicit = -p.kappa * p.mu * (mass @ u_n)

    def evaluate(x: np.ndarray) -> tuple[np.ndarray, SparseMatrix]:
        u, y = _split(ops, x)
        field = VectorField(space, u)
        r1 = r1_fixed @ x - mass @ u_n / k
        r2 = mass @ y + linear_21 @ u + explicit + p.kappa * cubic_load(space, field)
        jac = sp.vstack([r1_fixed, sp.hstack([linear_21 + p.kappa * cubic_jacobian(space, field), mass])])
        return np.concatenate([r1, r2]), jac.tocsr()

    u_new, h_new, result = _solve(ops, cfg, evaluate, state.u_curr, state.h_last)
    return _finish(ops, state, k, u_new, h_new, result, u_prev=state.u_curr)


def _cn_system(
    ops: DiscreteOperators,
    p: ModelParams,
    k: float,
    u_n: VectorField,
    cross_with: VectorField | None,
    anisotropy: bool,
):
    """Residual/Jacobian of a CN-type step from u_n with time step k.

    ``cross_with`` is the known field u_hat of the two-step scheme; ``None``
    makes the cross term implicit in the midpoint (start-up step).
    """
    space = ops.space
    mass, stiffness = ops.mass, ops.stiffness
    un = u_n.coeffs
    beta = p.beta if anisotropy else 0.0
    linear_mid = 0.5 * (stiffness - p.kappa * p.mu * mass + beta * ops.anisotropy)
    fixed_cross = None if cross_with is None else p.gamma * cross_matrix(space, cross_with)

    def evaluate(x: np.ndarray) -> tuple[np.ndarray, SparseMatrix]:
        u, y = _split(ops, x)
        field = VectorField(space, u)
        if fixed_cross is None:
            midpoint = VectorField(space, 0.5 * (u + un))
            cross = p.gamma * cross_matrix(space, midpoint)
            j11 = mass / k - 0.5 * p.gamma * cross_matrix(space, VectorField(space, y))
        else:
            cross = fixed_cross
            j11 = mass / k
        j12 = ops.field_operator + cross
        r1 = mass @ (u - un) / k + j12 @ y
        r2 = mass @ y + linear_mid @ (u + un) + p.kappa * psi_load(space, u_n, field)
        j21 = linear_mid + p.kappa * psi_jacobian(space, u_n, field)
        jac = sp.bmat([[j11, j12], [j21, mass]], format="csr")
        return np.concatenate([r1, r2]), jac

    return evaluate


def cn_first_step(
    state: StepperState, p: ModelParams, ops: DiscreteOperators, cfg: SchemeConfig
) -> StepperState:
    """Start-up step of the Crank-Nicolson scheme (fully implicit cross term).

    With ``first_step_substeps = s > 1`` the start-up system is solved s
    times with step k/s; H^{1/2} is the field of the last substep.
    """
    if state.n != 0:
        raise ValueError(f"cn_first_step needs the initial state, got step {state.n}")
    substeps = cfg.first_step_substeps
    k_sub = cfg.k / substeps
    current, h_guess = state.u_curr, state.h_last
    dissipated = 0.0
    iterations = 0
    result = None
    for _ in range(substeps):
        evaluate = _cn_system(ops, p, k_sub, current, None, cfg.first_step_anisotropy)
        current, h_guess, result = _solve(ops, cfg, evaluate, current, h_guess)
        dissipated += dissipated_energy(h_guess, k_sub, p)
        iterations += result.iterations
    assert result is not None
    result = NewtonResult(result.solution, iterations, result.residuals)
    return _finish(ops, state, cfg.k, current, h_guess, result, u_prev=state.u_curr, dissipated=dissipated)


def cn_step(state: StepperState, p: ModelParams, ops: DiscreteOperators, cfg: SchemeConfig) -> StepperState:
    """One step of the two-step Crank-Nicolson scheme (n >= 1).

    Raises:
        ValueError: The state carries no previous solution
    """
    if state.u_prev is None:
        raise ValueError("cn_step needs u^{n-1}; start with cn_first_step")
    u_hat = VectorField(ops.space, 1.5 * state.u_curr.coeffs - 0.5 * state.u_prev.coeffs)
    evaluate = _cn_system(ops, p, cfg.k, state.u_curr, u_hat, anisotropy=True)
    u_new, h_new, result = _solve(ops, cfg, evaluate, state.u_curr, state.h_last)
    return _finish(ops, state, cfg.k, u_new, h_new, result, u_prev=state.u_curr)


def advance(state: StepperState, p: ModelParams, ops: DiscreteOperators, cfg: SchemeConfig) -> StepperState:
    """Dispatch one step of the configured scheme.

    Raises:
        StepError: The step failed; wraps the solver error
    """
    try:
        if cfg.scheme == SchemeKind.CN:
            if state.n == 0:
                return cn_first_step(state, p, ops, cfg)
            return cn_step(state, p, ops, cfg)
        return euler_step(state, p, ops, cfg)
    except SolverError as e:
        logger.error("step_failed", step=state.n + 1, time=(state.n + 1) * cfg.k, error=str(e))
        raise StepError(state.n + 1, (state.n + 1) * cfg.k, e) from e


class Stepper:
    """Single-stream time stepper holding the current state."""

    def __init__(self, space: FeSpace, p: ModelParams, cfg: SchemeConfig, u0: VectorField) -> None:
        self.params = p
        self.cfg = cfg
        self.ops = DiscreteOperators(space, p)
        self.state = initial_state(self.ops, u0)

    @property
    def space(self) -> FeSpace:
        return self.ops.space

    def initial_record(self) -> StepRecord:
        return StepRecord(step=0, time=0.0, energy=self.state.energy_curr)

    def step(self) -> StepRecord:
        """Advance one step and return its diagnostics."""
        previous = self.state
        self.state = advance(previous, self.params, self.ops, self.cfg)
        h = self.state.h_last
        return StepRecord(
            step=self.state.n,
            time=self.state.t,
            energy=self.state.energy_curr,
            h_l2=norm(self.space, h, "L2"),
            h_h1semi=norm(self.space, h, "H1_semi"),
            dissipation_residual=self.state.energy_curr - previous.energy_curr + self.state.dissipated_last,
            newton_iters=self.state.newton_iters_last,
        )

    def reset(self, u0: VectorField) -> None:
        self.state = initial_state(self.ops, u0)
