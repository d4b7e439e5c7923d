"""Simulation runs: initial data, time marching, time series and snapshots."""

from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path

from rich.progress import Progress

from llbarfem.config import Config, InitialProjection
from llbarfem.csv_writer import write_series_csv
from llbarfem.errors import InvalidValueError, StepError
from llbarfem.expressions import resolve_initial_data
from llbarfem.fem import FeSpace, VectorField, interpolate_nodal, ritz_project
from llbarfem.logging import get_logger, run_context
from llbarfem.mesh import build_structured_mesh
from llbarfem.models import RunOutput, StepRecord
from llbarfem.schemes import Stepper, StepperState
from llbarfem.vtk_writer import write_snapshot_vtk

logger = get_logger(__name__)

Observer = Callable[[StepperState, StepRecord], None]


def build_space(cfg: Config, divisions: int | None = None) -> FeSpace:
    mesh = build_structured_mesh(cfg.dim, cfg.divisions if divisions is None else divisions)
    return FeSpace(mesh)


def initial_field(space: FeSpace, cfg: Config) -> VectorField:
    """u_h^0 from the configured initial data: Ritz projection or nodal interpolant."""
    data = resolve_initial_data(cfg.initial_data, mu=cfg.mu)
    if cfg.initial_projection == InitialProjection.NODAL:
        return interpolate_nodal(space, data)
    return ritz_project(space, data, data.gradient)


@dataclass
class Trajectory:
    """Every time level of a run: u^n and the H solved for at step n (H^0 is H(u^0))."""

    space: FeSpace
    k: float
    u: list[VectorField] = field(default_factory=list)
    h: list[VectorField] = field(default_factory=list)
    records: list[StepRecord] = field(default_factory=list)

    def record(self, state: StepperState, record: StepRecord) -> None:
        self.u.append(state.u_curr)
        self.h.append(state.h_last)
        self.records.append(record)

    @property
    def n_steps(self) -> int:
        return len(self.u) - 1


def march(
    cfg: Config,
    space: FeSpace,
    observers: list[Observer],
    n_steps: int | None = None,
) -> list[StepRecord]:
    """Run the configured scheme, calling every observer at each time level (t = 0 included)."""
    steps = cfg.n_steps if n_steps is None else n_steps
    with run_context(str(cfg.scheme), space.mesh.divisions, cfg.dt):
        stepper = Stepper(space, cfg.model_params(), cfg.scheme_config(), initial_field(space, cfg))
        records = [stepper.initial_record()]
        for observer in observers:
            observer(stepper.state, records[0])

        logger.info("run_started", steps=steps, energy=records[0].energy)
        for _ in range(steps):
            record = stepper.step()
            records.append(record)
            for observer in observers:
                observer(stepper.state, record)

        logger.info("run_complete", steps=steps, energy=records[-1].energy)
    return records


def solve_trajectory(cfg: Config, divisions: int | None = None, n_steps: int | None = None) -> Trajectory:
    """Run without file output, keeping every time level (used by the studies)."""
    space = build_space(cfg, divisions)
    trajectory = Trajectory(space=space, k=cfg.dt)
    march(cfg, space, [trajectory.record], n_steps=n_steps)
    return trajectory


def _snapshot_observer(cfg: Config, space: FeSpace, steps: list[int]) -> Observer:
    directory = Path(cfg.vtk_dir or ".")

    def observe(state: StepperState, record: StepRecord) -> None:
        if record.step % cfg.snapshot_every == 0:
            path = directory / f"snapshot_{record.step:06d}.vtk"
            write_snapshot_vtk(space, state.u_curr, state.h_last, record.time, path)
            steps.append(record.step)

    return observe


def run_simulation(cfg: Config, progress: Progress | None = None) -> RunOutput:
    """Run one simulation and write the configured CSV and VTK outputs.

    Args:
        cfg: Validated configuration
        progress: Optional rich progress bar advanced once per step

    Returns:
        RunOutput with one record per time level

    Raises:
        StepError: A step failed; the CSV holds the steps completed before it
        OutputError: An output file cannot be written
        InvalidValueError: VTK output requested on a 1D mesh
    """
    space = build_space(cfg)
    snapshots = cfg.vtk_dir is not None and cfg.snapshot_every > 0
    if snapshots and cfg.dim != 2:
        raise InvalidValueError("VTK snapshots need dim = 2", key="vtk_dir")

    snapshot_steps: list[int] = []
    completed: list[StepRecord] = []
    observers: list[Observer] = [lambda state, record: completed.append(record)]
    if snapshots:
        observers.append(_snapshot_observer(cfg, space, snapshot_steps))
    if progress is not None:
        task = progress.add_task(f"[cyan]{cfg.scheme} 1/h={cfg.divisions}", total=cfg.n_steps)
        observers.append(lambda state, record: progress.advance(task) if record.step > 0 else None)

    def output(records: list[StepRecord]) -> RunOutput:
        return RunOutput(
            scheme=cfg.scheme,
            divisions=cfg.divisions,
            k=cfg.dt,
            records=records,
            snapshot_steps=snapshot_steps,
        )

    try:
        records = march(cfg, space, observers)
    except StepError:
        partial = output(completed)
        if cfg.csv_path is not None:
            write_series_csv(partial, cfg.csv_path)
            logger.error("partial_output_flushed", path=cfg.csv_path, steps=len(partial.records) - 1)
        raise

    result = output(records)
    if cfg.csv_path is not None:
        write_series_csv(result, cfg.csv_path)
    return result
