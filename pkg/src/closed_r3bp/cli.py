from __future__ import annotations

import contextlib
import json
import logging
import math
import sys
from collections.abc import Callable, Iterator
from enum import Enum
from pathlib import Path
from typing import Any, Optional

import numpy as np
import typer
import yaml
from pydantic import ValidationError
from rich.console import Console
from rich.progress import BarColumn, Progress, SpinnerColumn, TaskProgressColumn, TextColumn
from rich.table import Table

from closed_r3bp import __version__
from closed_r3bp.config_file import resolve_run_config
from closed_r3bp.exceptions import (
    ClosedR3BPError,
    ConfigurationError,
    DomainError,
    ResonanceError,
)
from closed_r3bp.hamiltonian import build_prepared, system_params
from closed_r3bp.models import CellStatus, ElementState, GridCell, GridMap, RunConfig, SystemParams
from closed_r3bp.normalizer import (
    NormalizationResult,
    max_steps,
    normalize,
    result_manifest,
    result_to_files,
    schedule,
    secular_hamiltonian,
)
from closed_r3bp.reporters import get_reporter
from closed_r3bp.utils.validator import validate_manifest

# Exit codes
EXIT_ERROR = 2  # Operational errors (unreadable files, bad overrides)

app = typer.Typer(
    name="closed-r3bp",
    help="Closed-form secular normalization of the exterior restricted three-body problem.",
    rich_markup_mode="markdown",
    no_args_is_help=True,
)

console = Console()
logger = logging.getLogger("closed_r3bp")


class PropagationMode(str, Enum):
    """Which model ``propagate`` integrates."""

    cartesian = "cartesian"
    secular = "secular"
    semianalytic = "semianalytic"


def _setup_logging(verbose: bool = False, debug: bool = False) -> None:
    """Configure logging based on verbosity flags."""
    if debug:
        logging.basicConfig(
            level=logging.DEBUG,
            format="%(asctime)s %(name)s %(levelname)s %(message)s",
            stream=sys.stderr,
        )
    elif verbose:
        logging.basicConfig(
            level=logging.INFO,
            format="%(name)s: %(message)s",
            stream=sys.stderr,
        )
    else:
        logging.basicConfig(level=logging.WARNING, stream=sys.stderr)


@contextlib.contextmanager
def _handle_errors() -> Iterator[None]:
    """Turn library errors into a red message and the matching exit code."""
    try:
        yield
    except ClosedR3BPError as err:
        console.print(f"[red]{type(err).__name__}: {err}[/red]")
        raise typer.Exit(err.exit_code) from None
    except ValidationError as err:
        console.print(f"[red]DomainError: {err.errors()[0]['msg']}[/red]")
        raise typer.Exit(DomainError.exit_code) from None
    except OSError as err:
        console.print(f"[red]Error: {err}[/red]")
        raise typer.Exit(EXIT_ERROR) from None


def _parse_overrides(items: Optional[list[str]]) -> dict[str, Any]:
    """``key=value`` pairs with YAML-typed values."""
    overrides: dict[str, Any] = {}
    for item in items or []:
        key, sep, raw = item.partition("=")
        if not sep or not key.strip():
            raise ConfigurationError(f"override must look like key=value, got {item!r}")
        try:
            overrides[key.strip()] = yaml.safe_load(raw)
        except yaml.YAMLError as exc:
            raise ConfigurationError(f"cannot parse override {item!r}: {exc}") from exc
    return overrides


def _run_config(
    config: Optional[str], overrides: Optional[list[str]], **options: Any
) -> RunConfig:
    """Config file, then ``--set`` pairs, then explicit options."""
    cli_args = _parse_overrides(overrides)
    cli_args.update({k: v for k, v in options.items() if v is not None})
    cfg = resolve_run_config(Path(config) if config else None, cli_args)
    logger.debug("resolved run configuration: %s", cfg.model_dump(mode="json"))
    return cfg


def _output_dir(out: str, cfg: RunConfig) -> Path:
    """Create the output directory and write the resolved configuration into it."""
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    (path / "config.json").write_text(
        json.dumps(cfg.model_dump(mode="json"), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    return path


def _system(cfg: RunConfig) -> SystemParams:
    return system_params(**cfg.system_inputs())


def _progress(quiet: bool) -> Progress:
    return Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        BarColumn(bar_width=20),
        TaskProgressColumn(),
        console=console,
        disable=quiet,
    )


def _normalized(cfg: RunConfig, *, quiet: bool, use_cache: bool) -> NormalizationResult:
    """Normalization for ``cfg``, from the cache when enabled and present."""
    params = _system(cfg)
    j_max = max_steps(params) if cfg.j_max is None else cfg.j_max

    cache = None
    if use_cache:
        from closed_r3bp.cache import NormalizationCache  # local to keep startup light

        cache = NormalizationCache()
        cached = cache.get(params, j_max, cfg.divisor_threshold)
        if cached is not None:
            if not quiet:
                console.print(f"[dim]Loaded {cached.steps_completed} steps from cache[/dim]")
            return cached

    plans = schedule(params, j_max)
    with _progress(quiet) as progress:
        task = progress.add_task("Building Hamiltonian...", total=None)
        prepared = build_prepared(params)
        progress.update(task, description="Normalizing...", total=len(plans), completed=0)
        result = normalize(
            prepared,
            j_max,
            threshold_factor=cfg.divisor_threshold,
            delta_l=cfg.delta_l_bound,
            on_step=lambda diag: progress.update(
                task, advance=1, description=f"Step {diag.label} done"
            ),
        )
    if cache is not None:
        cache.put(result, j_max, cfg.divisor_threshold)
    return result


def _axis(low: float, high: float, count: int) -> list[float]:
    return [float(v) for v in np.linspace(low, high, count)]


def _run_map(
    label: str,
    a_values: list[float],
    e_values: list[float],
    quiet: bool,
    compute: Callable[..., GridMap],
) -> GridMap:
    with _progress(quiet) as progress:
        task = progress.add_task(label, total=len(a_values) * len(e_values))

        def advance(row: int, col: int, cell: GridCell) -> None:
            progress.update(task, advance=1)

        return compute(on_cell=advance)


def _print_status_counts(grid: GridMap) -> None:
    counts = {status: 0 for status in CellStatus}
    for row in grid.cells:
        for cell in row:
            counts[cell.status] += 1
    summary = ", ".join(f"{status.value}: {n}" for status, n in counts.items() if n)
    console.print(f"[dim]Cells: {summary}[/dim]")


# ── Commands ─────────────────────────────────────────────────────────────


@app.command()
def build(
    config: Optional[str] = typer.Option(None, "--config", "-c", help="Path to run config YAML"),
    overrides: Optional[list[str]] = typer.Option(
        None, "--set", "-s", help="Override a config key, e.g. `--set a_star=30`"
    ),
    a_star: Optional[float] = typer.Option(None, "--a-star", help="Reference semi-major axis"),
    e_star: Optional[float] = typer.Option(None, "--e-star", help="Reference eccentricity"),
    k_mu: Optional[int] = typer.Option(None, "--k-mu", help="Mass-ratio truncation order"),
    k_mp: Optional[int] = typer.Option(None, "--k-mp", help="Multipole truncation order"),
    out: str = typer.Option("out", "--out", "-o", help="Output directory"),
    quiet: bool = typer.Option(False, "--quiet", "-q", help="Suppress progress output"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Log pipeline steps"),
    debug: bool = typer.Option(False, "--debug", help="Enable debug logging"),
) -> None:
    """Build the prepared Hamiltonian `Z0 + R0` and write both series."""
    _setup_logging(verbose=verbose, debug=debug)
    with _handle_errors():
        cfg = _run_config(config, overrides, a_star=a_star, e_star=e_star, k_mu=k_mu, k_mp=k_mp)
        params = _system(cfg)
        with _progress(quiet) as progress:
            progress.add_task("Building Hamiltonian...", total=None)
            prepared = build_prepared(params)
        path = _output_dir(out, cfg)
        reporter = get_reporter("series")
        reporter.write(prepared.z0, path / "z0.txt")
        reporter.write(prepared.remainder, path / "remainder_0.txt")
        (path / "params.json").write_text(
            json.dumps(params.model_dump(mode="json"), indent=2) + "\n", encoding="utf-8"
        )
    if not quiet:
        console.print(
            f"[green]Prepared Hamiltonian[/green] nu={params.nu} nu1={params.nu1} "
            f"nbk={params.nbk}: {len(prepared.remainder)} remainder terms -> {path}"
        )


@app.command(name="normalize")
def normalize_command(
    config: Optional[str] = typer.Option(None, "--config", "-c", help="Path to run config YAML"),
    overrides: Optional[list[str]] = typer.Option(
        None, "--set", "-s", help="Override a config key, e.g. `--set j_max=4`"
    ),
    a_star: Optional[float] = typer.Option(None, "--a-star", help="Reference semi-major axis"),
    e_star: Optional[float] = typer.Option(None, "--e-star", help="Reference eccentricity"),
    k_mu: Optional[int] = typer.Option(None, "--k-mu", help="Mass-ratio truncation order"),
    k_mp: Optional[int] = typer.Option(None, "--k-mp", help="Multipole truncation order"),
    j_max: Optional[int] = typer.Option(None, "--j-max", help="Number of normalization steps"),
    cache: bool = typer.Option(False, "--cache/--no-cache", help="Reuse stored normalizations"),
    out: str = typer.Option("out", "--out", "-o", help="Output directory"),
    quiet: bool = typer.Option(False, "--quiet", "-q", help="Suppress progress and tables"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Log every step"),
    debug: bool = typer.Option(False, "--debug", help="Enable debug logging"),
) -> None:
    """Run the normalization and write generating functions, normal forms and remainders.

    Prints the remainder bound of every step and the optimal order. A run stopped by a
    small divisor keeps its completed steps on disk and exits with the resonance code.
    """
    from closed_r3bp.diagnostics import optimal_order, remainder_bounds  # local to keep startup light

    _setup_logging(verbose=verbose, debug=debug)
    with _handle_errors():
        cfg = _run_config(
            config, overrides, a_star=a_star, e_star=e_star, k_mu=k_mu, k_mp=k_mp, j_max=j_max
        )
        result = _normalized(cfg, quiet=quiet, use_cache=cache)
        path = _output_dir(out, cfg)
        for name, text in result_to_files(result).items():
            (path / name).write_text(text, encoding="utf-8")
        manifest = result_manifest(result)
        validate_manifest(manifest)
        (path / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
        bounds = remainder_bounds(result, delta_l=cfg.delta_l_bound)

    j_opt = optimal_order(bounds)
    if not quiet:
        table = Table(title=f"Remainder bounds (nu={result.params.nu})")
        table.add_column("j", justify="right")
        table.add_column("R terms", justify="right")
        table.add_column("bound", justify="right")
        for j, bound in enumerate(bounds):
            style = "bold green" if j == j_opt else ""
            terms = len(result.remainder_after(j))
            table.add_row(str(j), str(terms), f"{bound:.3e}", style=style)
        console.print(table)
        console.print(f"Optimal order j_opt = [bold]{j_opt}[/bold]; files in {path}")
    if result.resonance:
        console.print(f"[red]ResonanceError: {result.abort_reason}[/red]")
        raise typer.Exit(ResonanceError.exit_code)
    if result.aborted:
        console.print(f"[yellow]Normalization stopped: {result.abort_reason}[/yellow]")


@app.command()
def propagate(
    mode: PropagationMode = typer.Option(
        PropagationMode.semianalytic, "--mode", "-m", help="cartesian, secular or semianalytic"
    ),
    config: Optional[str] = typer.Option(None, "--config", "-c", help="Path to run config YAML"),
    overrides: Optional[list[str]] = typer.Option(
        None, "--set", "-s", help="Override a config key, e.g. `--set e_star=0.7`"
    ),
    a_star: Optional[float] = typer.Option(None, "--a-star", help="Initial semi-major axis"),
    e_star: Optional[float] = typer.Option(None, "--e-star", help="Initial eccentricity"),
    j_max: Optional[int] = typer.Option(None, "--j-max", help="Normalization order used"),
    span_periods: Optional[float] = typer.Option(
        None, "--span", help="Span in periods of the particle's reference orbit"
    ),
    samples: Optional[int] = typer.Option(None, "--samples", help="Number of output rows"),
    cache: bool = typer.Option(False, "--cache/--no-cache", help="Reuse stored normalizations"),
    out: str = typer.Option("out", "--out", "-o", help="Output directory"),
    quiet: bool = typer.Option(False, "--quiet", "-q", help="Suppress progress output"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Log propagation details"),
    debug: bool = typer.Option(False, "--debug", help="Enable debug logging"),
) -> None:
    """Propagate the particle from its initial osculating elements and write `timeseries.csv`.

    The initial state is `(a_star, e_star, inclination_deg, anomaly_deg, g_deg, h_deg)`
    with a true anomaly. `secular` writes mean elements; the other modes write
    osculating ones.
    """
    from closed_r3bp.propagator import (  # local to keep startup light
        elements_to_cartesian,
        initial_state,
        osc_to_mean,
        propagate_cartesian,
        propagate_secular,
        semianalytic_propagate,
    )

    _setup_logging(verbose=verbose, debug=debug)
    with _handle_errors():
        cfg = _run_config(
            config,
            overrides,
            a_star=a_star,
            e_star=e_star,
            j_max=j_max,
            span_periods=span_periods,
            samples=samples,
        )
        params = _system(cfg)
        inclination = 0.0 if cfg.planar else math.radians(cfg.inclination_deg)
        z0 = initial_state(
            cfg.a_star,
            cfg.e_star,
            inclination=inclination,
            anomaly=math.radians(cfg.anomaly_deg),
            g=math.radians(cfg.g_deg),
            h=0.0 if cfg.planar else math.radians(cfg.h_deg),
        )
        span = cfg.span_periods * 2.0 * math.pi * math.sqrt(cfg.a_star**3 / cfg.gm0)
        tolerances = {"samples": cfg.samples, "rtol": cfg.rtol, "atol": cfg.atol}

        states: list[ElementState]
        if mode is PropagationMode.cartesian:
            with _progress(quiet) as progress:
                progress.add_task("Integrating full model...", total=None)
                trajectory = propagate_cartesian(
                    elements_to_cartesian(z0, params.gm0), span, params, **tolerances
                )
            states = trajectory.elements(params.gm0)
        else:
            result = _normalized(cfg, quiet=quiet, use_cache=cache)
            with _progress(quiet) as progress:
                progress.add_task("Integrating secular flow...", total=None)
                if mode is PropagationMode.secular:
                    j = result.steps_completed
                    states = propagate_secular(
                        osc_to_mean(z0, result, j),
                        span,
                        secular_hamiltonian(result, j),
                        params,
                        **tolerances,
                    )
                else:
                    states = semianalytic_propagate(z0, span, result, **tolerances)

        path = _output_dir(out, cfg)
        get_reporter("timeseries").write(states, path / "timeseries.csv")
    if not quiet:
        console.print(f"[green]{len(states)} samples[/green] ({mode.value}) -> {path}")


@app.command(name="remainder-map")
def remainder_map_command(
    config: Optional[str] = typer.Option(None, "--config", "-c", help="Path to run config YAML"),
    overrides: Optional[list[str]] = typer.Option(
        None, "--set", "-s", help="Override a config key, e.g. `--set a_count=40`"
    ),
    workers: Optional[int] = typer.Option(
        None, "--workers", "-w", help="Parallel cell workers (0 = one per CPU)"
    ),
    out: str = typer.Option("out", "--out", "-o", help="Output directory"),
    quiet: bool = typer.Option(False, "--quiet", "-q", help="Suppress progress output"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Log every cell"),
    debug: bool = typer.Option(False, "--debug", help="Enable debug logging"),
) -> None:
    """Map the remainder bound over an (a*, e*) grid of the planar circular problem.

    Writes `remainder_map.csv`, its `remainder_map_status.csv` companion and the
    secular-boundary polyline `boundary.csv`.
    """
    from closed_r3bp.diagnostics import remainder_map, secular_boundary

    _setup_logging(verbose=verbose, debug=debug)
    with _handle_errors():
        cfg = _run_config(config, overrides, workers=workers)
        a_values = _axis(cfg.a_min, cfg.a_max, cfg.a_count)
        e_values = _axis(cfg.e_min, cfg.e_max, cfg.e_count)
        grid = _run_map(
            "Remainder map...",
            a_values,
            e_values,
            quiet,
            lambda on_cell: remainder_map(a_values, e_values, cfg, on_cell=on_cell),
        )
        boundary = secular_boundary(grid, cfg.threshold)
        path = _output_dir(out, cfg)
        get_reporter("grid").write(grid, path / "remainder_map.csv")
        get_reporter("boundary").write(boundary, path / "boundary.csv")
    if not quiet:
        _print_status_counts(grid)
        crossed = sum(1 for point in boundary if point.e is not None)
        console.print(
            f"[green]Boundary[/green] crosses {cfg.threshold:g} in {crossed}/{len(boundary)} "
            f"columns -> {path}"
        )


@app.command(name="fli-map")
def fli_map_command(
    config: Optional[str] = typer.Option(None, "--config", "-c", help="Path to run config YAML"),
    overrides: Optional[list[str]] = typer.Option(
        None, "--set", "-s", help="Override a config key, e.g. `--set fli_periods=100`"
    ),
    workers: Optional[int] = typer.Option(
        None, "--workers", "-w", help="Parallel cell workers (0 = one per CPU)"
    ),
    out: str = typer.Option("out", "--out", "-o", help="Output directory"),
    quiet: bool = typer.Option(False, "--quiet", "-q", help="Suppress progress output"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Log every cell"),
    debug: bool = typer.Option(False, "--debug", help="Enable debug logging"),
) -> None:
    """Map the fast Lyapunov indicator over an (a, e) grid; writes `fli_map.csv`."""
    from closed_r3bp.diagnostics import fli_map

    _setup_logging(verbose=verbose, debug=debug)
    with _handle_errors():
        cfg = _run_config(config, overrides, workers=workers)
        a_values = _axis(cfg.a_min, cfg.a_max, cfg.a_count)
        e_values = _axis(cfg.e_min, cfg.e_max, cfg.e_count)
        grid = _run_map(
            "FLI map...",
            a_values,
            e_values,
            quiet,
            lambda on_cell: fli_map(a_values, e_values, cfg, on_cell=on_cell),
        )
        path = _output_dir(out, cfg)
        get_reporter("grid").write(grid, path / "fli_map.csv")
    if not quiet:
        _print_status_counts(grid)
        console.print(f"[green]FLI map[/green] -> {path}")


@app.command()
def curves(
    config: Optional[str] = typer.Option(None, "--config", "-c", help="Path to run config YAML"),
    overrides: Optional[list[str]] = typer.Option(
        None, "--set", "-s", help="Override a config key, e.g. `--set a_min=7`"
    ),
    out: str = typer.Option("out", "--out", "-o", help="Output directory"),
    quiet: bool = typer.Option(False, "--quiet", "-q", help="Suppress the resonance table"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Log details"),
    debug: bool = typer.Option(False, "--debug", help="Enable debug logging"),
) -> None:
    """Write the perihelion-crossing and Hill curves of the planar circular problem.

    Also lists the mean-motion resonances of the octupole harmonics inside the grid.
    """
    from closed_r3bp.diagnostics import comparison_curves, resonance_locations

    _setup_logging(verbose=verbose, debug=debug)
    with _handle_errors():
        cfg = _run_config(config, overrides)
        inputs = cfg.system_inputs()
        inputs.update(e1=0.0, planar=True, circular=True)
        params = system_params(**inputs)
        a_values = _axis(cfg.a_min, cfg.a_max, cfg.a_count)
        points = comparison_curves(a_values, params)
        path = _output_dir(out, cfg)
        get_reporter("curves").write(points, path / "curves.csv")
    if not quiet:
        table = Table(title="Mean-motion resonances")
        table.add_column("period ratio", justify="right")
        table.add_column("a [AU]", justify="right")
        seen: set[tuple[int, int]] = set()
        for s1, s2, a in resonance_locations(params):
            k = math.gcd(s1, s2)
            ratio = (s1 // k, s2 // k)
            if ratio in seen or not cfg.a_min <= a <= cfg.a_max:
                continue
            seen.add(ratio)
            table.add_row(f"{ratio[0]}:{ratio[1]}", f"{a:.4f}")
        console.print(table)
        console.print(f"[green]{len(points)} curve points[/green] -> {path}")


@app.command()
def version() -> None:
    """Show closed-r3bp version."""
    console.print(f"closed-r3bp version {__version__}")


def main() -> None:
    """Main entry point for the CLI."""
    app()


if __name__ == "__main__":
    main()
