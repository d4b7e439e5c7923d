"""Data models: physical parameters, scheme settings, run and study records."""

from enum import StrEnum
from typing import Annotated

import numpy as np
from pydantic import AfterValidator, BaseModel, ConfigDict, Field
from pydantic_core import PydanticCustomError

AXIS_TOLERANCE = 1e-12


class SchemeKind(StrEnum):
    """Fully discrete time stepping schemes."""

    EULER = "euler"
    EULER_BLOCH = "euler_bloch"
    CN = "cn"


class LinearSolverKind(StrEnum):
    DIRECT = "direct"
    KRYLOV = "krylov"


def check_unit_axis(value: tuple[float, float, float]) -> tuple[float, float, float]:
    length = float(np.linalg.norm(value))
    if abs(length - 1.0) > AXIS_TOLERANCE:
        raise PydanticCustomError(
            "axis_not_unit",
            "anisotropy axis must have unit length, got length {length}",
            {"length": length},
        )
    return value


UnitAxis = Annotated[tuple[float, float, float], AfterValidator(check_unit_axis)]


class ModelParams(BaseModel):
    """Coefficients of the LLBar system.

    The sign of ``mu`` selects the regime: ``mu > 0`` is LLBar below the
    Curie temperature, ``mu < 0`` with small ``lambda_e`` the regularised
    LLBloch equation above it. ``beta`` may take either sign.
    """

    model_config = ConfigDict(frozen=True)

    lambda_r: float = Field(..., gt=0, description="Relativistic damping")
    lambda_e: float = Field(..., ge=0, description="Exchange damping")
    gamma: float = Field(..., description="Gyromagnetic ratio")
    kappa: float = Field(..., gt=0, description="Internal exchange strength")
    mu: float = Field(..., description="Temperature-dependent coefficient")
    beta: float = Field(..., description="Uniaxial anisotropy constant")
    e_axis: UnitAxis = Field(default=(0.0, 0.0, 1.0), description="Anisotropy axis (unit vector)")

    @property
    def e(self) -> np.ndarray:
        return np.asarray(self.e_axis, dtype=float)

    @property
    def regime(self) -> str:
        """Model described by the parameters (naming follows the sign conventions)."""
        if self.mu > 0:
            return "llbar_below_curie"
        if self.lambda_e == 0:
            return "llbloch_above_curie"
        return "regularised_llbloch_above_curie"


class SchemeConfig(BaseModel):
    """Time step, scheme selection and solver tolerances."""

    model_config = ConfigDict(frozen=True)

    k: float = Field(..., gt=0, description="Time step")
    scheme: SchemeKind = Field(default=SchemeKind.EULER)
    newton_tol: float = Field(default=1e-10, gt=0)
    newton_max_iter: int = Field(default=25, ge=1)
    linear_tol: float = Field(default=1e-12, gt=0)
    linear_max_iter: int = Field(default=1000, ge=1)
    linear_solver: LinearSolverKind = Field(default=LinearSolverKind.DIRECT)
    first_step_substeps: int = Field(default=1, ge=1, description="Substeps for the CN start-up step")
    first_step_anisotropy: bool = Field(
        default=True, description="Keep the anisotropy term in the CN start-up system"
    )


class StepRecord(BaseModel):
    """Diagnostics of one time level."""

    step: int = Field(..., ge=0)
    time: float = Field(..., ge=0)
    energy: float
    h_l2: float = Field(default=0.0, ge=0, description="||H||_L2 of the last solve")
    h_h1semi: float = Field(default=0.0, ge=0, description="||grad H||_L2 of the last solve")
    dissipation_residual: float = Field(default=0.0)
    newton_iters: int = Field(default=0, ge=0)

    def to_csv_row(self) -> dict[str, str | int]:
        """Convert to CSV row format (reals with 17 significant digits)."""
        return {
            "step": self.step,
            "time": format_real(self.time),
            "energy": format_real(self.energy),
            "H_l2": format_real(self.h_l2),
            "H_h1semi": format_real(self.h_h1semi),
            "dissipation_residual": format_real(self.dissipation_residual),
            "newton_iters": self.newton_iters,
        }


def format_real(value: float | None) -> str:
    return "" if value is None else f"{value:.17g}"


class RunOutput(BaseModel):
    """Time series of a simulation (row 0 is the initial state)."""

    scheme: SchemeKind
    divisions: int
    k: float
    records: list[StepRecord] = Field(default_factory=list)
    snapshot_steps: list[int] = Field(default_factory=list)

    @property
    def energies(self) -> list[float]:
        return [r.energy for r in self.records]

    @property
    def max_dissipation_residual(self) -> float:
        return max((r.dissipation_residual for r in self.records[1:]), default=0.0)

    @property
    def max_newton_iters(self) -> int:
        return max((r.newton_iters for r in self.records), default=0)


class ErrorNorms(BaseModel):
    """max_n of the difference between nested solutions in three norms."""

    l2: float = Field(..., ge=0)
    h1: float = Field(..., ge=0)
    linf: float = Field(..., ge=0)


class ConvergenceLevel(BaseModel):
    """Errors e_h = u_h - u_{h/2} for the level of mesh size h and its refinement."""

    divisions: int
    h: float
    u: ErrorNorms | None = None
    H: ErrorNorms | None = None


class RatePair(BaseModel):
    """Extrapolated orders log2(e_2h / e_h) between two successive error levels."""

    coarse_divisions: int
    fine_divisions: int
    u_l2: float | None = None
    u_h1: float | None = None
    u_linf: float | None = None
    H_l2: float | None = None
    H_h1: float | None = None
    H_linf: float | None = None

    def to_csv_row(self) -> dict[str, str | int]:
        return {
            "coarse_divisions": self.coarse_divisions,
            "fine_divisions": self.fine_divisions,
            "rate_u_l2": format_real(self.u_l2),
            "rate_u_h1": format_real(self.u_h1),
            "rate_u_linf": format_real(self.u_linf),
            "rate_H_l2": format_real(self.H_l2),
            "rate_H_h1": format_real(self.H_h1),
            "rate_H_linf": format_real(self.H_linf),
        }


class ConvergenceReport(BaseModel):
    scheme: SchemeKind
    k: float
    levels: list[ConvergenceLevel] = Field(default_factory=list)
    rates: list[RatePair] = Field(default_factory=list)

    @property
    def finest_rates(self) -> RatePair | None:
        return self.rates[-1] if self.rates else None


class EpsilonRecord(BaseModel):
    epsilon: float = Field(..., ge=0)
    u_h1_error: float = Field(..., ge=0, description="max_t ||u^eps - u^0||_H1")
    h_l2_error: float = Field(..., ge=0, description="sqrt(k sum ||H^eps - H^0||_L2^2)")

    def to_csv_row(self) -> dict[str, str]:
        return {
            "epsilon": format_real(self.epsilon),
            "u_h1_error": format_real(self.u_h1_error),
            "H_l2_error": format_real(self.h_l2_error),
        }


class EpsilonReport(BaseModel):
    divisions: int
    k: float
    records: list[EpsilonRecord] = Field(default_factory=list)
    u_h1_slope: float | None = None
    h_l2_slope: float | None = None


class TemporalRecord(BaseModel):
    k: float = Field(..., gt=0)
    u_l2_error: float = Field(..., ge=0, description="||u_k - u_ref||_L2 at the final time")
    ratio: float | None = Field(default=None, description="error at the previous (larger) k over this one")

    def to_csv_row(self) -> dict[str, str]:
        return {
            "k": format_real(self.k),
            "u_l2_error": format_real(self.u_l2_error),
            "ratio": format_real(self.ratio),
        }


class TemporalReport(BaseModel):
    scheme: SchemeKind
    divisions: int
    reference_factor: int
    records: list[TemporalRecord] = Field(default_factory=list)
