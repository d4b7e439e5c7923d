"""CSV output for run time series and study reports."""

import csv
from collections.abc import Iterable
from pathlib import Path

from llbarfem.errors import OutputError
from llbarfem.logging import get_logger
from llbarfem.models import (
    ConvergenceReport,
    EpsilonReport,
    ErrorNorms,
    RunOutput,
    StepRecord,
    TemporalReport,
    format_real,
)

logger = get_logger(__name__)

SERIES_FIELDNAMES = [
    "step",
    "time",
    "energy",
    "H_l2",
    "H_h1semi",
    "dissipation_residual",
    "newton_iters",
]

CONVERGENCE_FIELDNAMES = [
    "divisions",
    "h",
    "u_l2",
    "u_h1",
    "u_linf",
    "H_l2",
    "H_h1",
    "H_linf",
    "rate_u_l2",
    "rate_u_h1",
    "rate_u_linf",
    "rate_H_l2",
    "rate_H_h1",
    "rate_H_linf",
]

EPSILON_FIELDNAMES = ["epsilon", "u_h1_error", "H_l2_error"]
TEMPORAL_FIELDNAMES = ["k", "u_l2_error", "ratio"]


def _write_rows(path: str | Path, fieldnames: list[str], rows: Iterable[dict]) -> None:
    path = Path(path)
    logger.info("writing_csv", path=str(path))
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as csvfile:
            writer = csv.DictWriter(csvfile, fieldnames=fieldnames, lineterminator="\n")
            writer.writeheader()
            count = 0
            for row in rows:
                writer.writerow(row)
                count += 1
        logger.info("csv_written", path=str(path), rows=count)
    except OSError as e:
        logger.error("csv_write_failed", path=str(path), error=str(e))
        raise OutputError(f"cannot write CSV ({e.strerror or e})", str(path)) from e


def write_series_csv(output: RunOutput, path: str | Path) -> None:
    """Write one row per time level, the initial state included.

    Raises:
        OutputError: The file cannot be written
    """
    _write_rows(path, SERIES_FIELDNAMES, (record.to_csv_row() for record in output.records))


def read_series_csv(path: str | Path) -> list[StepRecord]:
    """Read a time series written by write_series_csv.

    Raises:
        OutputError: The file is missing, unreadable or malformed
    """
    path = Path(path)
    try:
        with path.open("r", newline="", encoding="utf-8") as csvfile:
            reader = csv.DictReader(csvfile)
            records = [
                StepRecord(
                    step=int(row["step"]),
                    time=float(row["time"]),
                    energy=float(row["energy"]),
                    h_l2=float(row["H_l2"]),
                    h_h1semi=float(row["H_h1semi"]),
                    dissipation_residual=float(row["dissipation_residual"]),
                    newton_iters=int(row["newton_iters"]),
                )
                for row in reader
            ]
    except OSError as e:
        logger.error("csv_read_failed", path=str(path), error=str(e))
        raise OutputError(f"cannot read CSV ({e.strerror or e})", str(path)) from e
    except (KeyError, ValueError) as e:
        logger.error("csv_malformed", path=str(path), error=str(e))
        raise OutputError(f"malformed series CSV ({e})", str(path)) from e

    logger.info("loaded_series", count=len(records), path=str(path))
    return records


def _norm_columns(prefix: str, norms: ErrorNorms | None) -> dict[str, str]:
    if norms is None:
        return {f"{prefix}_l2": "", f"{prefix}_h1": "", f"{prefix}_linf": ""}
    return {
        f"{prefix}_l2": format_real(norms.l2),
        f"{prefix}_h1": format_real(norms.h1),
        f"{prefix}_linf": format_real(norms.linf),
    }


def write_convergence_csv(report: ConvergenceReport, path: str | Path) -> None:
    """One row per error level; rate columns hold the rate from the previous level (blank on the first)."""
    rates = {rate.fine_divisions: rate.to_csv_row() for rate in report.rates}
    rows = []
    for level in report.levels:
        row: dict[str, str | int] = {"divisions": level.divisions, "h": format_real(level.h)}
        row |= _norm_columns("u", level.u)
        row |= _norm_columns("H", level.H)
        rate = rates.get(level.divisions, {})
        row |= {name: rate.get(name, "") for name in CONVERGENCE_FIELDNAMES if name.startswith("rate_")}
        rows.append(row)
    _write_rows(path, CONVERGENCE_FIELDNAMES, rows)


def write_epsilon_csv(report: EpsilonReport, path: str | Path) -> None:
    _write_rows(path, EPSILON_FIELDNAMES, (record.to_csv_row() for record in report.records))


def write_temporal_csv(report: TemporalReport, path: str | Path) -> None:
    _write_rows(path, TEMPORAL_FIELDNAMES, (record.to_csv_row() for record in report.records))
