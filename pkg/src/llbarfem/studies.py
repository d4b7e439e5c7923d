"""Reproduction studies: nested-mesh convergence, lambda_e -> 0 limit, temporal order.

Runs inside a study are independent and execute on a thread pool bounded by
``Settings.solver_threads``; reports are assembled in input order.
"""

from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

import numpy as np

from llbarfem.config import Config, load_settings
from llbarfem.errors import InvalidValueError
from llbarfem.fem import FeSpace, VectorField, norm, prolong
from llbarfem.logging import get_logger
from llbarfem.mesh import mesh_size
from llbarfem.models import (
    ConvergenceLevel,
    ConvergenceReport,
    EpsilonRecord,
    EpsilonReport,
    ErrorNorms,
    RatePair,
    SchemeKind,
    TemporalRecord,
    TemporalReport,
)
from llbarfem.simulation import Trajectory, solve_trajectory

logger = get_logger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def _map_ordered(fn: Callable[[T], R], items: Sequence[T], max_workers: int | None) -> list[R]:
    workers = max_workers if max_workers is not None else load_settings().solver_threads
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


def compute_rate(coarse_error: float, fine_error: float) -> float | None:
    """log2(coarse / fine); None when either error is zero or not finite."""
    if not (np.isfinite(coarse_error) and np.isfinite(fine_error)):
        return None
    if coarse_error <= 0.0 or fine_error <= 0.0:
        return None
    return float(np.log2(coarse_error / fine_error))


def fit_loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> float | None:
    """Least-squares slope of log(y) against log(x) over the pairs with x, y > 0."""
    pairs = [(x, y) for x, y in zip(xs, ys, strict=True) if x > 0 and y > 0]
    if len(pairs) < 2:
        return None
    logx, logy = np.log(np.array(pairs)).T
    return float(np.polyfit(logx, logy, 1)[0])


def _difference_norms(a: VectorField, b: VectorField) -> tuple[float, float, float]:
    diff = a - b
    space = diff.space
    return norm(space, diff, "L2"), norm(space, diff, "H1"), norm(space, diff, "Linf")


def _max_norms(
    coarse: list[VectorField], fine: list[VectorField], fine_space: FeSpace, start: int
) -> ErrorNorms:
    pairs = zip(coarse[start:], fine[start:], strict=True)
    values = np.array([_difference_norms(prolong(c, fine_space), f) for c, f in pairs])
    l2, h1, linf = values.max(axis=0)
    return ErrorNorms(l2=float(l2), h1=float(h1), linf=float(linf))


def _check_levels(levels: Sequence[int]) -> None:
    if len(levels) < 2:
        raise InvalidValueError("a convergence study needs at least two levels", key="levels")
    for coarse, fine in zip(levels, levels[1:]):
        if fine != 2 * coarse:
            raise InvalidValueError(
                f"levels must double: {coarse} is followed by {fine}", key="levels"
            )


def convergence_study(cfg: Config, max_workers: int | None = None) -> ConvergenceReport:
    """Nested-mesh study with extrapolated rates.

    Level j holds e_j = max_n |u_{h_j} - u_{h_j/2}| with the coarse solution
    prolonged to the finer mesh; u is compared at every step n >= 0, H at the
    solved steps n >= 1 (H^{n+1/2} for CN). Rates are log2(e_j / e_{j+1}).

    Raises:
        InvalidValueError: Fewer than two levels, or levels that do not double
        StepError: A run failed
    """
    levels = list(cfg.levels)
    _check_levels(levels)
    logger.info("convergence_study_started", levels=levels, scheme=str(cfg.scheme), k=cfg.dt)

    trajectories: list[Trajectory] = _map_ordered(
        lambda n: solve_trajectory(cfg, divisions=n), levels, max_workers
    )

    report = ConvergenceReport(scheme=cfg.scheme, k=cfg.dt)
    for coarse, fine in zip(trajectories, trajectories[1:]):
        level = ConvergenceLevel(
            divisions=coarse.space.mesh.divisions,
            h=mesh_size(coarse.space.mesh),
            u=_max_norms(coarse.u, fine.u, fine.space, start=0),
            H=_max_norms(coarse.h, fine.h, fine.space, start=1) if coarse.n_steps > 0 else None,
        )
        report.levels.append(level)
        logger.info("level_complete", divisions=level.divisions, u_l2=level.u.l2 if level.u else None)

    for lo, hi in zip(report.levels, report.levels[1:]):
        u_lo, u_hi, h_lo, h_hi = lo.u, hi.u, lo.H, hi.H
        assert u_lo is not None and u_hi is not None
        has_h = h_lo is not None and h_hi is not None
        report.rates.append(
            RatePair(
                coarse_divisions=lo.divisions,
                fine_divisions=hi.divisions,
                u_l2=compute_rate(u_lo.l2, u_hi.l2),
                u_h1=compute_rate(u_lo.h1, u_hi.h1),
                u_linf=compute_rate(u_lo.linf, u_hi.linf),
                H_l2=compute_rate(h_lo.l2, h_hi.l2) if has_h else None,
                H_h1=compute_rate(h_lo.h1, h_hi.h1) if has_h else None,
                H_linf=compute_rate(h_lo.linf, h_hi.linf) if has_h else None,
            )
        )

    logger.info("convergence_study_complete", rates=[r.model_dump() for r in report.rates])
    return report


def epsilon_study(cfg: Config, max_workers: int | None = None) -> EpsilonReport:
    """lambda_e -> 0 study at fixed mesh and time step.

    The reference is the Bloch-variant Euler scheme with lambda_e = 0; each
    epsilon runs the same scheme with lambda_e = epsilon.

    Raises:
        InvalidValueError: mu >= 0, or epsilons not strictly decreasing and nonnegative
    """
    if cfg.mu >= 0:
        raise InvalidValueError(f"the epsilon study needs mu < 0, got {cfg.mu}", key="mu")
    epsilons = list(cfg.epsilons)
    if not epsilons or any(e < 0 for e in epsilons) or any(b >= a for a, b in zip(epsilons, epsilons[1:])):
        raise InvalidValueError("epsilons must be nonnegative and strictly decreasing", key="epsilons")

    logger.info("epsilon_study_started", epsilons=epsilons, divisions=cfg.divisions, k=cfg.dt)
    base = cfg.model_copy(update={"scheme": SchemeKind.EULER_BLOCH})
    runs = [base.model_copy(update={"lambda_e": e}) for e in [0.0, *epsilons]]
    reference, *regularised = _map_ordered(solve_trajectory, runs, max_workers)

    report = EpsilonReport(divisions=cfg.divisions, k=cfg.dt)
    space = reference.space
    for epsilon, run in zip(epsilons, regularised, strict=True):
        u_error = max(norm(space, a - b, "H1") for a, b in zip(run.u, reference.u, strict=True))
        h_sq = sum(norm(space, a - b, "L2") ** 2 for a, b in zip(run.h[1:], reference.h[1:], strict=True))
        record = EpsilonRecord(epsilon=epsilon, u_h1_error=u_error, h_l2_error=float(np.sqrt(cfg.dt * h_sq)))
        report.records.append(record)
        logger.info(
            "epsilon_complete",
            epsilon=epsilon,
            u_h1_error=record.u_h1_error,
            h_l2_error=record.h_l2_error,
        )

    report.u_h1_slope = fit_loglog_slope(epsilons, [r.u_h1_error for r in report.records])
    report.h_l2_slope = fit_loglog_slope(epsilons, [r.h_l2_error for r in report.records])
    logger.info("epsilon_study_complete", u_h1_slope=report.u_h1_slope, h_l2_slope=report.h_l2_slope)
    return report


def temporal_study(cfg: Config, max_workers: int | None = None) -> TemporalReport:
    """Self-convergence in time on a fixed mesh.

    For each k the run is compared with a run at k / reference_factor at the
    final time: the error is |u_k^N - u_ref^{N f}|_L2. The configuration should
    keep every mesh mode inside the damping range of the scheme at the
    coarsest k; see data/configs/temporal.cfg.

    Raises:
        InvalidValueError: Empty time step list
    """
    factor = cfg.reference_factor
    time_steps = list(cfg.time_steps)
    if not time_steps or any(k <= 0 for k in time_steps):
        raise InvalidValueError("time_steps must be a nonempty list of positive steps", key="time_steps")

    logger.info("temporal_study_started", time_steps=time_steps, factor=factor, scheme=str(cfg.scheme))
    jobs: list[tuple[Config, int]] = []
    for k in time_steps:
        n_steps = int(cfg.t_end / k + 1e-9)
        jobs.append((cfg.model_copy(update={"dt": k}), n_steps))
        jobs.append((cfg.model_copy(update={"dt": k / factor}), n_steps * factor))
    runs = _map_ordered(lambda job: solve_trajectory(job[0], n_steps=job[1]), jobs, max_workers)

    report = TemporalReport(scheme=cfg.scheme, divisions=cfg.divisions, reference_factor=factor)
    previous: float | None = None
    for k, run, ref in zip(time_steps, runs[0::2], runs[1::2], strict=True):
        space = run.space
        error = norm(space, run.u[-1] - ref.u[run.n_steps * factor], "L2")
        ratio = previous / error if previous is not None and error > 0 else None
        report.records.append(TemporalRecord(k=k, u_l2_error=error, ratio=ratio))
        logger.info("time_step_complete", k=k, u_l2_error=error, ratio=ratio)
        previous = error

    return report
