"""Rich console output for runs and studies."""

from rich.console import Console
from rich.panel import Panel
from rich.progress import BarColumn, MofNCompleteColumn, Progress, TextColumn, TimeElapsedColumn
from rich.table import Table

from llbarfem.models import ConvergenceReport, EpsilonReport, ErrorNorms, RunOutput, TemporalReport

console = Console()


def set_quiet(quiet: bool) -> None:
    """Silence (or restore) all console output."""
    console.quiet = quiet


def create_progress_bar() -> Progress:
    """Create a configured progress bar for time stepping.

    Returns:
        Configured Progress instance
    """
    return Progress(
        TextColumn("[progress.description]{task.description}"),
        BarColumn(),
        MofNCompleteColumn(),
        TextColumn("•"),
        TimeElapsedColumn(),
        console=console,
    )


def print_header(command: str) -> None:
    """Print the application header."""
    console.print(
        Panel.fit(
            "[bold cyan]llbarfem[/bold cyan]\n"
            f"[dim]Mixed FEM for the LLBar / LLBloch equations: {command}[/dim]",
            border_style="cyan",
        )
    )
    console.print()


def _real(value: float | None, fmt: str = ".3e") -> str:
    return "-" if value is None else format(value, fmt)


def print_run_summary(output: RunOutput) -> None:
    """Print the summary panel of a simulation."""
    if not output.records:
        console.print("[yellow]No steps to summarize[/yellow]")
        return

    first, last = output.records[0], output.records[-1]
    summary_text = f"""[bold]Run Summary[/bold]

Scheme: {output.scheme.value}
Divisions: {output.divisions}    Time step: {output.k:g}
Steps: {last.step}    Final time: {last.time:g}

Initial energy: {first.energy:.10g}
Final energy: {last.energy:.10g}
Energy change: {last.energy - first.energy:+.6e}

Max dissipation residual: {output.max_dissipation_residual:.3e}
Max Newton iterations: {output.max_newton_iters}
Snapshots: {len(output.snapshot_steps)}"""

    console.print(Panel(summary_text, border_style="green", title="Summary"))
    console.print()


def _norm_cells(norms: ErrorNorms | None) -> list[str]:
    if norms is None:
        return ["-", "-", "-"]
    return [_real(norms.l2), _real(norms.h1), _real(norms.linf)]


def print_convergence_table(report: ConvergenceReport) -> None:
    """Print per-level errors and the rates between successive levels."""
    errors = Table(title="max_n errors", show_header=True, header_style="bold magenta")
    errors.add_column("1/h", justify="right")
    for name in ("u L2", "u H1", "u Linf", "H L2", "H H1", "H Linf"):
        errors.add_column(name, justify="right")
    for level in report.levels:
        errors.add_row(str(level.divisions), *_norm_cells(level.u), *_norm_cells(level.H))

    rates = Table(title="extrapolated rates", show_header=True, header_style="bold magenta")
    rates.add_column("levels", justify="center")
    for name in ("u L2", "u H1", "u Linf", "H L2", "H H1", "H Linf"):
        rates.add_column(name, justify="right")
    for rate in report.rates:
        rates.add_row(
            f"{rate.coarse_divisions} -> {rate.fine_divisions}",
            *(
                _real(v, ".3f")
                for v in (rate.u_l2, rate.u_h1, rate.u_linf, rate.H_l2, rate.H_h1, rate.H_linf)
            ),
        )

    console.print()
    console.print(errors)
    console.print(rates)
    console.print()


def print_epsilon_table(report: EpsilonReport) -> None:
    table = Table(
        title=f"lambda_e -> 0 (1/h={report.divisions}, k={report.k:g})",
        header_style="bold magenta",
    )
    table.add_column("epsilon", justify="right")
    table.add_column("max_n |u_eps - u_0|_H1", justify="right")
    table.add_column("(k sum |H_eps - H_0|^2)^1/2", justify="right")
    for record in report.records:
        table.add_row(f"{record.epsilon:g}", _real(record.u_h1_error), _real(record.h_l2_error))
    console.print()
    console.print(table)
    console.print(
        f"Fitted slopes: u H1 {_real(report.u_h1_slope, '.3f')}, H L2 {_real(report.h_l2_slope, '.3f')}"
    )
    console.print()


def print_temporal_table(report: TemporalReport) -> None:
    table = Table(
        title=f"temporal self-convergence ({report.scheme.value}, reference k/{report.reference_factor})",
        header_style="bold magenta",
    )
    table.add_column("k", justify="right")
    table.add_column("max_n |u_k - u_ref|_L2", justify="right")
    table.add_column("ratio", justify="right")
    for record in report.records:
        table.add_row(f"{record.k:g}", _real(record.u_l2_error), _real(record.ratio, ".3f"))
    console.print()
    console.print(table)
    console.print()


def print_error(message: str) -> None:
    """Print an error message.

    Args:
        message: Error message to display
    """
    console.print(f"[bold red]✗ Error:[/bold red] {message}")


def print_success(message: str) -> None:
    """Print a success message.

    Args:
        message: Success message to display
    """
    console.print(f"[bold green]✓[/bold green] {message}")
