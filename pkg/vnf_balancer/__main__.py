import typer
from pathlib import Path
from rich.console import Console
from rich.progress import Progress, SpinnerColumn, TextColumn, BarColumn, TimeElapsedColumn
from rich.logging import RichHandler
from rich.table import Table
import logging
from typing import Optional

from .config.settings import ExperimentConfig, read_document, resolve_config_path, validate_config
from .core.experiment import EXIT_FAILURE, EXIT_INVALID_CONFIG, EXIT_OK, Cell, CellResult, ExperimentRunner
from .exceptions import ConfigurationError, ModelError, ParameterError, PathError, ReportError, SolverError, TopologyError

# Initialize typer app and rich console
app = typer.Typer(help="Migration versus replication experiments for VNF placement.")
console = Console()
log_console = Console(stderr=True)


def setup_logging(config: ExperimentConfig):
    """Setup logging with rich handler."""
    log_level = getattr(logging, config.logging.level.upper(), logging.INFO)

    handlers = [
        RichHandler(
            console=log_console,
            show_time=False,
            show_path=False,
            rich_tracebacks=True
        )
    ]

    if config.logging.file:
        # Ensure log directory exists
        log_path = Path(config.logging.file)
        log_path.parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(config.logging.file))

    logging.basicConfig(
        level=log_level,
        format=config.logging.format,
        handlers=handlers
    )


def load_config(config: str, seed: Optional[int] = None, out: Optional[Path] = None, workers: Optional[int] = None) -> ExperimentConfig:
    """Load a validated config, applying command-line overrides."""
    try:
        settings = ExperimentConfig.load_from_file(config)
    except ConfigurationError as e:
        console.print(f"[red]Configuration error: {str(e)}[/red]")
        raise typer.Exit(EXIT_INVALID_CONFIG)
    overrides = {}
    if seed is not None:
        overrides["seed"] = seed
    if out is not None:
        overrides["output"] = settings.output.model_copy(update={"directory": str(out)})
    if workers is not None:
        overrides["solver"] = settings.solver.model_copy(update={"workers": workers})
    return settings.model_copy(update=overrides) if overrides else settings


def results_table(results: list) -> Table:
    table = Table(title="Cells")
    table.add_column("method")
    table.add_column("alpha", justify="right")
    table.add_column("status")
    table.add_column("objective", justify="right")
    table.add_column("m-r", justify="right")
    table.add_column("server max", justify="right")
    table.add_column("link max", justify="right")
    for result in results:
        report = result.report
        style = "green" if report is not None else "red"
        table.add_row(
            result.cell.method.value,
            f"{result.cell.alpha:g}",
            f"[{style}]{result.status}[/{style}]",
            f"{report.objective:.6f}" if report is not None else "-",
            report.count_pair if report is not None else "-",
            f"{report.server_max:.3f}" if report is not None else "-",
            f"{report.link_max:.3f}" if report is not None else "-",
        )
    return table


@app.command()
def run(
    config: str = typer.Argument(..., help="Config file or bundled preset name"),
    seed: Optional[int] = typer.Option(None, "--seed", "-s", help="Override the master seed", min=0),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Override the output directory"),
    workers: Optional[int] = typer.Option(None, "--workers", "-w", help="Cells solved in parallel", min=1),
):
    """
    Run every (method, alpha) cell of an experiment and write the reports.
    """
    settings = load_config(config, seed, out, workers)
    setup_logging(settings)
    runner = ExperimentRunner(settings)

    progress_display = Progress(
        SpinnerColumn(),
        TextColumn("[bold blue]{task.description}"),
        BarColumn(),
        TimeElapsedColumn(),
        console=console
    )
    try:
        with progress_display:
            task = progress_display.add_task("[cyan]Solving initial placement...", total=None)
            runner.prepare()
            progress_display.update(task, description="[cyan]Solving cells...", total=len(settings.cells), completed=0)

            def advance(result: CellResult):
                progress_display.update(task, advance=1, description=f"[cyan]{result.cell.label}: {result.status}")

            outcome = runner.run(on_cell=advance)
    except (SolverError, ModelError, ParameterError, PathError, TopologyError) as e:
        console.print(f"[red]Experiment failed: {str(e)}[/red]")
        raise typer.Exit(EXIT_FAILURE)
    except ReportError as e:
        console.print(f"[red]Report error: {str(e)}[/red]")
        raise typer.Exit(EXIT_FAILURE)

    console.print(results_table(outcome.results))
    for result in outcome.results:
        if result.error:
            console.print(f"[yellow]{result.cell.label}: {result.error}[/yellow]")
    console.print(f"Reports written to [bold]{outcome.out_dir}[/bold]")
    raise typer.Exit(outcome.exit_code)


@app.command()
def validate(config: str = typer.Argument(..., help="Config file or bundled preset name")):
    """
    Check a configuration and list every violated field.
    """
    try:
        diagnostics = validate_config(read_document(resolve_config_path(config)))
    except ConfigurationError as e:
        console.print(f"[red]Configuration error: {str(e)}[/red]")
        raise typer.Exit(EXIT_INVALID_CONFIG)
    if not diagnostics:
        console.print("[green]Configuration is valid[/green]")
        raise typer.Exit(EXIT_OK)
    for d in diagnostics:
        console.print(f"[red]{d.field}[/red]: {d.reason}")
    raise typer.Exit(EXIT_INVALID_CONFIG)


@app.command("export-lp")
def export_lp(
    config: str = typer.Argument(..., help="Config file or bundled preset name"),
    cell: str = typer.Option(..., "--cell", "-c", help="Cell as <method>,<alpha>, e.g. mgr,0.5"),
    seed: Optional[int] = typer.Option(None, "--seed", "-s", help="Override the master seed", min=0),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Write the LP text to this file"),
):
    """
    Export one cell's model in the CPLEX LP format.
    """
    settings = load_config(config, seed)
    setup_logging(settings)
    try:
        target = Cell.parse(cell)
    except ParameterError as e:
        console.print(f"[red]Invalid cell: {str(e)}[/red]")
        raise typer.Exit(EXIT_INVALID_CONFIG)
    try:
        text = ExperimentRunner(settings).export_lp(target, out)
    except ParameterError as e:
        console.print(f"[red]Invalid parameters: {str(e)}[/red]")
        raise typer.Exit(EXIT_INVALID_CONFIG)
    except (SolverError, ModelError, PathError, TopologyError, ReportError) as e:
        console.print(f"[red]Export failed: {str(e)}[/red]")
        raise typer.Exit(EXIT_FAILURE)
    if out is None:
        typer.echo(text, nl=False)
    else:
        console.print(f"LP model written to [bold]{out}[/bold]")


if __name__ == "__main__":
    app()
