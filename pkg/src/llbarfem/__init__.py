"""llbarfem: mixed finite elements for the LLBar / LLBloch equations - command line entry point."""

import argparse
from collections.abc import Sequence
from pathlib import Path

from pydantic import ValidationError

from llbarfem.config import Config, load_settings, parse_config
from llbarfem.console_output import (
    create_progress_bar,
    print_convergence_table,
    print_epsilon_table,
    print_error,
    print_header,
    print_run_summary,
    print_success,
    print_temporal_table,
    set_quiet,
)
from llbarfem.csv_writer import write_convergence_csv, write_epsilon_csv, write_temporal_csv
from llbarfem.errors import EXIT_CONFIG_ERROR, EXIT_OK, LLBarError
from llbarfem.logging import configure_logging, get_logger
from llbarfem.simulation import run_simulation
from llbarfem.studies import convergence_study, epsilon_study, temporal_study

logger = get_logger(__name__)

COMMANDS = ("run", "converge", "epsilon", "temporal")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="llbarfem",
        description="Mixed FEM solver and reproduction studies for the LLBar / LLBloch equations",
    )
    subcommands = parser.add_subparsers(dest="command", required=True)
    helps = {
        "run": "single simulation",
        "converge": "nested-mesh convergence study",
        "epsilon": "lambda_e -> 0 regularisation study",
        "temporal": "temporal self-convergence study",
    }
    for name in COMMANDS:
        sub = subcommands.add_parser(name, help=helps[name])
        sub.add_argument("--config", type=Path, help="flat key = value configuration file")
        sub.add_argument(
            "--override",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override a configuration key (repeatable)",
        )
        sub.add_argument("--quiet", action="store_true", help="warnings only, no console output")
    return parser


def _run(cfg: Config) -> None:
    with create_progress_bar() as progress:
        output = run_simulation(cfg, progress=progress)
    print_run_summary(output)
    if cfg.csv_path:
        print_success(f"Time series saved to {cfg.csv_path}")


def _converge(cfg: Config, threads: int) -> None:
    report = convergence_study(cfg, max_workers=threads)
    print_convergence_table(report)
    if cfg.report_path:
        write_convergence_csv(report, cfg.report_path)
        print_success(f"Report saved to {cfg.report_path}")


def _epsilon(cfg: Config, threads: int) -> None:
    report = epsilon_study(cfg, max_workers=threads)
    print_epsilon_table(report)
    if cfg.report_path:
        write_epsilon_csv(report, cfg.report_path)
        print_success(f"Report saved to {cfg.report_path}")


def _temporal(cfg: Config, threads: int) -> None:
    report = temporal_study(cfg, max_workers=threads)
    print_temporal_table(report)
    if cfg.report_path:
        write_temporal_csv(report, cfg.report_path)
        print_success(f"Report saved to {cfg.report_path}")


def main(argv: Sequence[str] | None = None) -> int:
    """Main entry point; returns the process exit status.

    0 on success, 2 for configuration errors, 3 for solver failures and
    4 for I/O failures.
    """
    args = build_parser().parse_args(argv)

    try:
        settings = load_settings()
    except ValidationError as e:
        configure_logging(log_level="INFO")
        print_error(f"invalid environment settings: {e}")
        return EXIT_CONFIG_ERROR

    configure_logging(log_level="WARNING" if args.quiet else settings.log_level)
    set_quiet(args.quiet)
    print_header(args.command)

    try:
        cfg = parse_config(args.config if args.config is not None else "", args.override)
        logger.info("command_started", command=args.command, threads=settings.solver_threads)
        match args.command:
            case "run":
                _run(cfg)
            case "converge":
                _converge(cfg, settings.solver_threads)
            case "epsilon":
                _epsilon(cfg, settings.solver_threads)
            case "temporal":
                _temporal(cfg, settings.solver_threads)
    except LLBarError as e:
        logger.error("command_failed", command=args.command, error=str(e), exit_code=e.exit_code)
        print_error(str(e))
        return e.exit_code

    logger.info("command_complete", command=args.command)
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
