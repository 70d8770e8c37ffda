"""CLI interface for harmonic-mpa."""

import logging
import sys
from contextlib import contextmanager
from dataclasses import replace
from pathlib import Path
from typing import Any, Callable, Dict, Iterator, List, Optional, Tuple

import click
import yaml
from rich.console import Console
from rich.logging import RichHandler
from rich.progress import Progress, SpinnerColumn, TextColumn, TimeElapsedColumn
from rich.syntax import Syntax
from rich.table import Table

from . import __version__
from .analysis import (
    community_artefact,
    community_scatter,
    compare_rankings,
    convergence_sweep,
    stability_probe,
)
from .config import (
    PROJECT_CONFIG_NAME,
    ExperimentConfig,
    create_default_config,
    get_global_config_path,
    get_project_config_path,
    load_config,
    save_config,
    substitute_variables,
)
from .dynamic import probe_uniqueness, run_change_experiment
from .errors import GraphError, HarmonicError, InvalidNewGraphError
from .exact import InfluenceProfile, exact_influence_all
from .fileio import (
    ego_graphs,
    load_communities,
    load_edge_list,
    load_graph,
    load_profile,
    save_communities,
    save_graph,
    save_profile,
    save_trace,
    write_json,
    write_table,
)
from .generators import (
    WheelSpec,
    community_surrogate,
    erdos_renyi_graph,
    generate_wheel,
    generate_wheel_pair,
    random_tree,
)
from .graph import WeightedFieldGraph
from .mpa import ProgressCallback, estimate_all, mpa_run

console = Console()

WHEEL_KEYS = {"n": int, "p": float, "q": float, "hub": int, "seed": int, "hub_seed": int}


class WheelParamType(click.ParamType):
    """Comma-separated ``key=value`` wheel parameters, e.g. ``n=50,p=0.01,seed=7``."""

    name = "wheel"

    def convert(self, value: Any, param: Optional[click.Parameter], ctx: Optional[click.Context]) -> Dict[str, Any]:
        if isinstance(value, dict):
            return value

        params: Dict[str, Any] = {}
        for item in str(value).split(","):
            key, sep, raw = item.partition("=")
            key = key.strip()
            if not sep or key not in WHEEL_KEYS:
                self.fail(
                    f"expected key=value pairs with keys {', '.join(WHEEL_KEYS)}, got {item!r}",
                    param,
                    ctx,
                )
            try:
                params[key] = WHEEL_KEYS[key](raw.strip())
            except ValueError:
                self.fail(f"invalid value for {key}: {raw!r}", param, ctx)
        return params


class IntListParamType(click.ParamType):
    """Comma-separated integers."""

    name = "ints"

    def convert(self, value: Any, param: Optional[click.Parameter], ctx: Optional[click.Context]) -> List[int]:
        if isinstance(value, (list, tuple)):
            return [int(v) for v in value]
        try:
            return [int(v) for v in str(value).split(",") if v.strip()]
        except ValueError:
            self.fail(f"expected comma-separated integers, got {value!r}", param, ctx)


class FloatListParamType(click.ParamType):
    """Comma-separated floats."""

    name = "floats"

    def convert(self, value: Any, param: Optional[click.Parameter], ctx: Optional[click.Context]) -> List[float]:
        if isinstance(value, (list, tuple)):
            return [float(v) for v in value]
        try:
            return [float(v) for v in str(value).split(",") if v.strip()]
        except ValueError:
            self.fail(f"expected comma-separated numbers, got {value!r}", param, ctx)


WHEEL = WheelParamType()
INT_LIST = IntListParamType()
FLOAT_LIST = FloatListParamType()


@contextmanager
def reporting_errors() -> Iterator[None]:
    """Map failures to exit codes: 2 for bad input, 1 for anything else."""
    try:
        yield
    except (click.ClickException, click.Abort, SystemExit):
        raise
    except (HarmonicError, ValueError) as e:
        console.print(f"[red]Error: {e}[/red]")
        sys.exit(2)
    except Exception as e:
        console.print(f"[red]Internal error: {type(e).__name__}: {e}[/red]")
        sys.exit(1)


@contextmanager
def mpa_progress(label: str) -> Iterator[ProgressCallback]:
    """Spinner showing the round counter and the last changes of a running MPA."""
    with Progress(
        SpinnerColumn(),
        TextColumn("{task.description}"),
        TimeElapsedColumn(),
        console=console,
        transient=True,
    ) as progress:
        task = progress.add_task(label, total=None)

        def update(t: int, delta_w: float, delta_h: float) -> None:
            progress.update(
                task, description=f"{label}: round {t}, ΔW {delta_w:.2e}, ΔH {delta_h:.2e}"
            )

        yield update


def graph_source_options(func: Callable[..., Any]) -> Callable[..., Any]:
    """Options selecting the graph a command works on."""
    options = [
        click.option("--edges", type=click.Path(exists=True, dir_okay=False), help="SNAP edge list; every node is joined to the field"),
        click.option("--graph", "graph_path", type=click.Path(exists=True, dir_okay=False), help="Graph file written by 'hmpa gen'"),
        click.option("--wheel", type=WHEEL, help="Generate a wheel, e.g. n=50,p=0.01,q=0.25,hub=1,seed=7"),
        click.option("--field-weight", type=float, help="Field edge weight (default from config)"),
        click.option("--communities", type=click.Path(exists=True, dir_okay=False), help="node,community CSV for --edges"),
        click.option("--community", type=int, help="Keep only this community of --edges"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def stopping_options(func: Callable[..., Any]) -> Callable[..., Any]:
    """Options overriding the configured stopping rule."""
    options = [
        click.option("--eps-w", type=float, help="Stop threshold on the largest W change"),
        click.option("--eps-h", type=float, help="Stop threshold on the largest relative estimate change"),
        click.option("--max-rounds", type=int, help="Give up after this many rounds"),
        click.option("--skip-into-field/--no-skip-into-field", default=None, help="Freeze messages sent into the field"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def out_option(func: Callable[..., Any]) -> Callable[..., Any]:
    return click.option(
        "--out", type=click.Path(file_okay=False), help="Output directory (default from config)"
    )(func)


def _with_stopping(
    cfg: ExperimentConfig,
    eps_w: Optional[float],
    eps_h: Optional[float],
    max_rounds: Optional[int],
    skip_into_field: Optional[bool],
) -> ExperimentConfig:
    """Apply command-line stopping flags on top of the loaded configuration."""
    overrides = {
        key: value
        for key, value in (
            ("eps_w", eps_w),
            ("eps_h", eps_h),
            ("max_rounds", max_rounds),
            ("skip_into_field", skip_into_field),
        )
        if value is not None
    }
    stopping = replace(cfg.stopping, **overrides)
    stopping.validate()
    return replace(cfg, stopping=stopping)


def _output_dir(cfg: ExperimentConfig, command: str, out: Optional[str]) -> Path:
    if out:
        path = Path(out)
    else:
        path = Path(substitute_variables(cfg.output_dir, {"command": command, "seed": str(cfg.seed)}))
    path.mkdir(parents=True, exist_ok=True)
    return path


def _wheel_spec(cfg: ExperimentConfig, params: Dict[str, Any], field_weight: float) -> WheelSpec:
    return WheelSpec(
        n=params.get("n", cfg.wheel.n),
        p=params.get("p", cfg.wheel.p),
        q=params.get("q", cfg.wheel.q),
        hub=params.get("hub", 1),
        field_weight=field_weight,
        seed=params.get("seed", cfg.seed),
        hub_seed=params.get("hub_seed"),
    )


def load_source(
    cfg: ExperimentConfig,
    edges: Optional[str],
    graph_path: Optional[str],
    wheel: Optional[Dict[str, Any]],
    field_weight: Optional[float],
    communities: Optional[str],
    community: Optional[int],
) -> Tuple[WeightedFieldGraph, Dict[str, Any]]:
    """Build the graph named by the source options.

    Returns:
        The graph and a description of its source for output headers

    Raises:
        click.UsageError: If not exactly one source is given
    """
    chosen = [name for name, value in (("--edges", edges), ("--graph", graph_path), ("--wheel", wheel)) if value]
    if len(chosen) != 1:
        raise click.UsageError("Give exactly one of --edges, --graph or --wheel")
    if (communities is None) != (community is None):
        raise click.UsageError("--communities and --community go together")
    if communities and not edges:
        raise click.UsageError("--communities applies to --edges only")

    weight = cfg.field_weight if field_weight is None else field_weight
    if edges and communities:
        _, g, _ = ego_graphs(edges, communities, community, weight)
        return g, {"edges": edges, "communities": communities, "community": community, "field_weight": weight}
    if edges:
        g, _ = load_edge_list(edges, weight)
        return g, {"edges": edges, "field_weight": weight}
    if graph_path:
        return load_graph(graph_path), {"graph": graph_path}

    spec = _wheel_spec(cfg, wheel or {}, weight)
    return generate_wheel(spec), {"wheel": {**vars(spec), "reserved": list(spec.reserved)}}


def _metadata(command: str, cfg: ExperimentConfig, source: Dict[str, Any], seed: int) -> Dict[str, Any]:
    return {"command": command, "source": source, "seed": seed, "config": cfg.to_dict()}


def _source_seed(cfg: ExperimentConfig, source: Dict[str, Any]) -> int:
    wheel = source.get("wheel")
    return int(wheel["seed"]) if wheel else cfg.seed


def _print_top(title: str, profiles: Dict[str, InfluenceProfile], limit: int = 10) -> None:
    first = next(iter(profiles.values()))
    table = Table(title=title)
    table.add_column("Rank", style="white")
    table.add_column("Node", style="cyan")
    for name in profiles:
        table.add_column(name, style="yellow")
    for rank, node in enumerate(first.ranking()[:limit], start=1):
        table.add_row(str(rank), str(node), *(f"{p[int(node)]:.6g}" for p in profiles.values()))
    console.print(table)


@click.group()
@click.version_option(version=__version__)
@click.option("--verbose", "-v", is_flag=True, help="Log solver and round details")
def cli(verbose: bool) -> None:
    """Harmonic influence in networks, exact and by message passing.

    harmonic-mpa computes the harmonic influence of every node exactly and
    with the synchronous Message Passing Algorithm, follows the MPA across
    topology changes and compares the two.
    """
    if verbose:
        package_logger = logging.getLogger("harmonic_mpa")
        package_logger.setLevel(logging.DEBUG)
        if not any(isinstance(h, RichHandler) for h in package_logger.handlers):
            package_logger.addHandler(RichHandler(console=console, show_path=False))


@cli.command()
@click.option(
    "--global",
    "global_",
    is_flag=True,
    help="Initialize global config instead of project config",
)
def init(global_: bool) -> None:
    """Initialize harmonic-mpa configuration.

    Creates a default configuration file with the standard tolerances.
    """
    if global_:
        config_path = get_global_config_path()
        label = "global"
    else:
        config_path = Path.cwd() / PROJECT_CONFIG_NAME
        label = "project"

    if config_path.exists():
        console.print(f"[yellow]{label.capitalize()} config already exists at {config_path}[/yellow]")
        if not click.confirm("Overwrite?"):
            console.print("[yellow]Initialization cancelled[/yellow]")
            return

    save_config(config_path, create_default_config())
    console.print(f"[green]✓ Created {label} config at {config_path}[/green]")
    console.print("\n[cyan]Edit the config file to change tolerances and graph defaults.[/cyan]")


@cli.command()
@click.option("--global", "global_", is_flag=True, help="Show global config")
@click.option("--project", is_flag=True, help="Show project config")
def config(global_: bool, project: bool) -> None:
    """Show configuration.

    Displays the current configuration. By default, shows the merged config.
    Use --global or --project to show specific configs.

    Examples:

        hmpa config

        hmpa config --project
    """
    with reporting_errors():
        if global_:
            config_path: Optional[Path] = get_global_config_path()
            if not config_path.exists():
                console.print("[yellow]No global config found[/yellow]")
                console.print("[cyan]Create one with: hmpa init --global[/cyan]")
                return
            console.print(f"[bold]Global config:[/bold] {config_path}\n")
            content = config_path.read_text()

        elif project:
            config_path = get_project_config_path()
            if not config_path:
                console.print("[yellow]No project config found[/yellow]")
                console.print("[cyan]Create one with: hmpa init[/cyan]")
                return
            console.print(f"[bold]Project config:[/bold] {config_path}\n")
            content = config_path.read_text()

        else:
            console.print("[bold]Merged configuration:[/bold]\n")
            content = yaml.dump(load_config().to_dict(), default_flow_style=False, sort_keys=False)

        console.print(Syntax(content, "yaml", theme="monokai", line_numbers=False))


@cli.command()
@graph_source_options
@click.option(
    "--method",
    type=click.Choice(["grounded", "per-leader"]),
    default="grounded",
    show_default=True,
    help="One grounded-Laplacian inverse, or one Dirichlet solve per leader",
)
@out_option
def exact(
    edges: Optional[str],
    graph_path: Optional[str],
    wheel: Optional[Dict[str, Any]],
    field_weight: Optional[float],
    communities: Optional[str],
    community: Optional[int],
    method: str,
    out: Optional[str],
) -> None:
    """Compute the exact harmonic influence of every node.

    Writes exact.csv with one node,influence row per node.

    Examples:

        hmpa exact --edges 0.edges --field-weight 0.040

        hmpa exact --wheel n=50,p=0.01,q=0.25,hub=1,seed=7
    """
    with reporting_errors():
        cfg = load_config()
        g, source = load_source(cfg, edges, graph_path, wheel, field_weight, communities, community)
        profile = exact_influence_all(g, method=method)

        out_dir = _output_dir(cfg, "exact", out)
        save_profile(profile, out_dir / "exact.csv", _metadata("exact", cfg, source, _source_seed(cfg, source)))

        _print_top(f"Exact influence ({g.n} nodes, {g.num_edges} edges)", {"exact": profile})
        console.print(f"[green]✓ Wrote {out_dir / 'exact.csv'}[/green]")


@cli.command()
@graph_source_options
@stopping_options
@click.option("--with-exact", is_flag=True, help="Also compute exact influence and compare")
@out_option
def mpa(
    edges: Optional[str],
    graph_path: Optional[str],
    wheel: Optional[Dict[str, Any]],
    field_weight: Optional[float],
    communities: Optional[str],
    community: Optional[int],
    eps_w: Optional[float],
    eps_h: Optional[float],
    max_rounds: Optional[int],
    skip_into_field: Optional[bool],
    with_exact: bool,
    out: Optional[str],
) -> None:
    """Run the Message Passing Algorithm to convergence.

    Writes estimates.csv, trace.csv and summary.json. Hitting --max-rounds
    is recorded as the stop reason, not treated as a failure.

    Examples:

        hmpa mpa --graph wheel.graph --eps-w 1e-10 --eps-h 1e-9

        hmpa mpa --edges 0.edges --communities 0.communities.csv --community 2
    """
    with reporting_errors():
        cfg = _with_stopping(load_config(), eps_w, eps_h, max_rounds, skip_into_field)
        g, source = load_source(cfg, edges, graph_path, wheel, field_weight, communities, community)
        seed = _source_seed(cfg, source)
        metadata = _metadata("mpa", cfg, source, seed)

        with mpa_progress("MPA") as progress:
            state, trace = mpa_run(g, cfg=cfg.stopping, progress=progress)
        estimates = estimate_all(g, state)

        out_dir = _output_dir(cfg, "mpa", out)
        save_profile(estimates, out_dir / "estimates.csv", metadata)
        save_trace(trace, out_dir / "trace.csv", metadata)

        summary: Dict[str, Any] = {
            **metadata,
            **trace.summary(),
            "stopping": vars(cfg.stopping),
            "top_node": estimates.top_node(),
        }
        profiles = {"estimate": estimates}
        if with_exact:
            exact_profile = exact_influence_all(g)
            save_profile(exact_profile, out_dir / "exact.csv", metadata)
            summary["comparison"] = compare_rankings(exact_profile, estimates).to_dict()
            profiles = {"exact": exact_profile, "estimate": estimates}
        write_json(summary, out_dir / "summary.json")

        table = Table(title="MPA run")
        table.add_column("Measure", style="cyan")
        table.add_column("Value", style="white")
        table.add_row("Rounds", str(trace.rounds))
        table.add_row("W converged at", str(trace.w_round))
        table.add_row("H converged at", str(trace.h_round))
        table.add_row("Stop reason", trace.stop_reason)
        console.print(table)
        _print_top("Top nodes", profiles)

        if not trace.converged:
            console.print(f"[yellow]Stopped at max_rounds={cfg.stopping.max_rounds} before the tolerances were met[/yellow]")
        console.print(f"[green]✓ Wrote results to {out_dir}[/green]")


@cli.command()
@click.option("--before", type=click.Path(exists=True, dir_okay=False), help="Graph file the run starts on")
@click.option("--after", type=click.Path(exists=True, dir_okay=False), help="Graph file after the change")
@click.option("--wheel-pair", type=WHEEL, help="Generate the hub-1/hub-26 wheel pair, e.g. n=50,seed=3")
@click.option("--field-weight", type=float, help="Field edge weight for --wheel-pair")
@stopping_options
@click.option("--no-exact", is_flag=True, help="Skip the exact influence of both graphs")
@out_option
def dynamic(
    before: Optional[str],
    after: Optional[str],
    wheel_pair: Optional[Dict[str, Any]],
    field_weight: Optional[float],
    eps_w: Optional[float],
    eps_h: Optional[float],
    max_rounds: Optional[int],
    skip_into_field: Optional[bool],
    no_exact: bool,
    out: Optional[str],
) -> None:
    """Converge, change the topology, converge again, and compare with a restart.

    Writes change.json, one trace per run and the estimates after the change.

    Examples:

        hmpa dynamic --before before.graph --after after.graph

        hmpa dynamic --wheel-pair n=50,p=0.01,q=0.25,seed=3
    """
    with reporting_errors():
        cfg = _with_stopping(load_config(), eps_w, eps_h, max_rounds, skip_into_field)
        if wheel_pair is not None:
            if before or after:
                raise click.UsageError("Use either --before/--after or --wheel-pair")
            params = {key: wheel_pair.get(key, getattr(cfg.wheel, key)) for key in ("n", "p", "q")}
            seed = wheel_pair.get("seed", cfg.seed)
            weight = cfg.field_weight if field_weight is None else field_weight
            g_before, g_after = generate_wheel_pair(field_weight=weight, seed=seed, **params)
            source: Dict[str, Any] = {"wheel_pair": {**params, "seed": seed, "field_weight": weight}}
        elif before and after:
            g_before = load_graph(before)
            try:
                g_after = load_graph(after)
            except GraphError as e:
                raise InvalidNewGraphError(f"Graph after the change is invalid: {e}") from e
            source = {"before": before, "after": after}
            seed = cfg.seed
        else:
            raise click.UsageError("Give --before and --after, or --wheel-pair")

        metadata = _metadata("dynamic", cfg, source, seed)
        with mpa_progress("Change experiment") as progress:
            report = run_change_experiment(g_before, g_after, cfg.stopping, with_exact=not no_exact, progress=progress)

        out_dir = _output_dir(cfg, "dynamic", out)
        traces = {"before": report.before_trace, "after": report.after_trace, "fresh": report.fresh_trace}
        for name, trace in traces.items():
            save_trace(trace, out_dir / f"trace_{name}.csv", {**metadata, "run": name})
            report.trace_files[name] = f"trace_{name}.csv"
        save_profile(report.after_estimates, out_dir / "estimates_after.csv", metadata)
        if report.exact_before is not None and report.exact_after is not None:
            save_profile(report.exact_before, out_dir / "exact_before.csv", metadata)
            save_profile(report.exact_after, out_dir / "exact_after.csv", metadata)
        write_json({**metadata, **report.to_dict()}, out_dir / "change.json")

        table = Table(title="Topology change")
        table.add_column("Measure", style="cyan")
        table.add_column("Value", style="white")
        table.add_row("Change at round", str(report.change_round))
        table.add_row("Edges retained / dropped / added", f"{report.retained_edges} / {report.dropped_edges} / {report.added_edges}")
        table.add_row("Rounds after the change", str(report.post_change_rounds))
        table.add_row("Rounds of a fresh run", str(report.fresh_rounds))
        table.add_row("W gap", f"{report.w_gap:.3e}")
        table.add_row("Relative estimate gap", f"{report.h_gap:.3e}")
        console.print(table)
        console.print(f"[green]✓ Wrote results to {out_dir}[/green]")


@cli.command()
@click.option("--exact", "exact_path", type=click.Path(exists=True, dir_okay=False), required=True, help="exact.csv")
@click.option("--estimates", "estimates_path", type=click.Path(exists=True, dir_okay=False), required=True, help="estimates.csv")
@click.option("--labels", type=click.Path(exists=True, dir_okay=False), help="node,community CSV")
@click.option("--top-k", type=click.IntRange(min=1), default=10, show_default=True, help="Top-k size per community")
@out_option
def compare(
    exact_path: str,
    estimates_path: str,
    labels: Optional[str],
    top_k: int,
    out: Optional[str],
) -> None:
    """Compare exact influence with MPA estimates.

    Writes comparison.json; with --labels also community.csv and the
    per-node scatter.csv.

    Examples:

        hmpa compare --exact exact.csv --estimates estimates.csv

        hmpa compare --exact exact.csv --estimates estimates.csv --labels communities.csv
    """
    with reporting_errors():
        cfg = load_config()
        exact_profile = load_profile(exact_path)
        estimates = load_profile(estimates_path)
        comparison = compare_rankings(exact_profile, estimates)

        source = {"exact": exact_path, "estimates": estimates_path, "labels": labels}
        metadata = _metadata("compare", cfg, source, cfg.seed)
        report: Dict[str, Any] = {**metadata, **comparison.to_dict()}

        out_dir = _output_dir(cfg, "compare", out)
        if labels:
            community_labels = load_communities(labels, exact_profile.n)
            artefact = community_artefact(exact_profile, estimates, community_labels, k=top_k)
            report["communities"] = artefact.to_dict()
            write_table(artefact.table, out_dir / "community.csv", metadata)
            write_table(community_scatter(exact_profile, estimates, community_labels), out_dir / "scatter.csv", metadata)

            table = Table(title="Overestimation by community")
            for column in ("Community", "Size", "Mean ratio", "Max ratio", "Top-k overlap", "Slope"):
                table.add_column(column, style="cyan" if column == "Community" else "white")
            for row in artefact.table.itertuples(index=False):
                table.add_row(
                    str(row.community), str(row.size), f"{row.mean_ratio:.4f}", f"{row.max_ratio:.4f}",
                    f"{row.topk_overlap:.2f}", f"{row.slope:.4f}",
                )
            console.print(table)
        write_json(report, out_dir / "comparison.json")

        console.print(
            f"Kendall tau {comparison.kendall_tau:.4f}, Spearman rho {comparison.spearman_rho:.4f}, "
            f"top node {'matches' if comparison.top1_match else 'differs'} "
            f"({comparison.exact_top} exact, {comparison.estimate_top} estimated)"
        )
        console.print(f"[green]✓ Wrote results to {out_dir}[/green]")


@cli.command()
@click.option("--family", type=click.Choice(["er", "wheel", "tree"]), default="er", show_default=True)
@click.option("--sizes", type=INT_LIST, default="100", show_default=True, help="Node counts, e.g. 50,100,200")
@click.option("--ratios", type=FLOAT_LIST, default="2,4,8", show_default=True, help="Peer edges per node (er only)")
@click.option("--seeds", type=click.IntRange(min=1), default=3, show_default=True, help="Graphs per point")
@click.option("--seed", type=int, help="First seed (default from config)")
@click.option("--field-weight", type=float, default=1.0, show_default=True, help="Field edge weight (er and wheel)")
@stopping_options
@out_option
def sweep(
    family: str,
    sizes: List[int],
    ratios: List[float],
    seeds: int,
    seed: Optional[int],
    field_weight: float,
    eps_w: Optional[float],
    eps_h: Optional[float],
    max_rounds: Optional[int],
    skip_into_field: Optional[bool],
    out: Optional[str],
) -> None:
    """Measure convergence rounds against m/n across a graph family.

    Writes sweep.csv, one row per graph, and fit.json with the least-squares
    fit of H-convergence rounds on m/n.

    Examples:

        hmpa sweep --family er --sizes 100 --ratios 2,4,8 --seeds 3

        hmpa sweep --family tree --sizes 20,50,100
    """
    with reporting_errors():
        cfg = _with_stopping(load_config(), eps_w, eps_h, max_rounds, skip_into_field)
        if not sizes:
            raise click.BadParameter("at least one size is required", param_hint="--sizes")
        first = cfg.seed if seed is None else seed
        seed_list = list(range(first, first + seeds))
        total = len(sizes) * (len(ratios) if family == "er" else 1) * len(seed_list)

        with Progress(SpinnerColumn(), TextColumn("{task.description}"), TimeElapsedColumn(), console=console, transient=True) as progress:
            task = progress.add_task(f"Sweeping {total} graphs", total=total)
            result = convergence_sweep(
                family,
                sizes,
                seed_list,
                cfg.stopping,
                ratios=ratios,
                field_weight=field_weight,
                wheel=cfg.wheel,
                on_row=lambda row: progress.advance(task),
            )

        source = {"family": family, "sizes": sizes, "ratios": ratios, "seeds": seed_list, "field_weight": field_weight}
        metadata = _metadata("sweep", cfg, source, first)
        out_dir = _output_dir(cfg, "sweep", out)
        write_table(result.table, out_dir / "sweep.csv", metadata)
        write_json({**metadata, **result.fit_dict()}, out_dir / "fit.json")

        table = Table(title=f"Mean rounds ({family})")
        for column in ("n", "m/n", "W rounds", "H rounds", "Diameter"):
            table.add_column(column, style="cyan" if column == "n" else "white")
        for row in result.mean_rounds().itertuples(index=False):
            table.add_row(
                str(row.n), f"{row.m_over_n:.2f}", f"{row.w_rounds:.1f}", f"{row.h_rounds:.1f}", f"{row.diameter:.1f}"
            )
        console.print(table)
        console.print(f"H rounds vs m/n: slope {result.slope:.4g}, R² {result.r_squared:.4f}")
        console.print(f"[green]✓ Wrote results to {out_dir}[/green]")


@cli.command()
@graph_source_options
@stopping_options
@click.option("--trials", type=click.IntRange(min=0), default=0, show_default=True, help="Also run this many random initial states")
@click.option("--seed", type=int, help="Seed of the random probes (default from config)")
@out_option
def stability(
    edges: Optional[str],
    graph_path: Optional[str],
    wheel: Optional[Dict[str, Any]],
    field_weight: Optional[float],
    communities: Optional[str],
    community: Optional[int],
    eps_w: Optional[float],
    eps_h: Optional[float],
    max_rounds: Optional[int],
    skip_into_field: Optional[bool],
    trials: int,
    seed: Optional[int],
    out: Optional[str],
) -> None:
    """Check local stability of the converged W messages.

    Writes stability.json with the spectral radii of the linearized updates.

    Examples:

        hmpa stability --wheel n=30,seed=2

        hmpa stability --graph er.graph --trials 10
    """
    with reporting_errors():
        cfg = _with_stopping(load_config(), eps_w, eps_h, max_rounds, skip_into_field)
        g, source = load_source(cfg, edges, graph_path, wheel, field_weight, communities, community)
        probe_seed = cfg.seed if seed is None else seed

        with mpa_progress("MPA") as progress:
            state, trace = mpa_run(g, cfg=cfg.stopping, progress=progress, backfill=False)
        report = stability_probe(g, state, seed=probe_seed)
        result: Dict[str, Any] = {**_metadata("stability", cfg, source, probe_seed), **report.to_dict()}
        result["mpa"] = trace.summary()
        if trials:
            result["uniqueness"] = probe_uniqueness(g, trials, cfg.stopping, seed=probe_seed).to_dict()

        out_dir = _output_dir(cfg, "stability", out)
        write_json(result, out_dir / "stability.json")

        verdict = "[green]stable[/green]" if report.stable else "[red]not stable[/red]"
        console.print(f"W spectral radius {report.w_radius:.6f}, H spectral radius {report.h_radius:.6f}: {verdict}")
        console.print(f"Finite-difference Jacobian error {report.fd_error:.2e}")
        if trials and not result["uniqueness"]["all_agree"]:
            console.print("[yellow]Random initial states reached a different fixed point[/yellow]")
        console.print(f"[green]✓ Wrote {out_dir / 'stability.json'}[/green]")


@cli.group()
def gen() -> None:
    """Generate graphs and write them to files."""


def _gen_metadata(generator: str, params: Dict[str, Any]) -> Dict[str, Any]:
    return {"generator": generator, "params": params}


@gen.command(name="wheel")
@click.option("--n", type=int, help="Nodes on the cycle (default from config)")
@click.option("--p", type=float, help="Chord probability")
@click.option("--q", type=float, help="Hub edge probability")
@click.option("--hub", type=int, default=1, show_default=True)
@click.option("--seed", type=int, help="Seed (default from config)")
@click.option("--field-weight", type=float, help="Field edge weight (default from config)")
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Graph file to write")
def gen_wheel(
    n: Optional[int],
    p: Optional[float],
    q: Optional[float],
    hub: int,
    seed: Optional[int],
    field_weight: Optional[float],
    out: str,
) -> None:
    """A cycle with random chords and random edges from one hub."""
    with reporting_errors():
        cfg = load_config()
        params = {key: value for key, value in (("n", n), ("p", p), ("q", q), ("seed", seed)) if value is not None}
        params["hub"] = hub
        weight = cfg.field_weight if field_weight is None else field_weight
        spec = _wheel_spec(cfg, params, weight)
        g = generate_wheel(spec)
        save_graph(g, out, _gen_metadata("wheel", {**vars(spec), "reserved": list(spec.reserved)}))
        console.print(f"[green]✓ Wrote wheel with {g.n} nodes and {g.num_edges} edges to {out}[/green]")


@gen.command(name="wheel-pair")
@click.option("--n", type=int, help="Nodes on the cycle (default from config)")
@click.option("--p", type=float, help="Chord probability")
@click.option("--q", type=float, help="Hub edge probability")
@click.option("--seed", type=int, help="Seed (default from config)")
@click.option("--field-weight", type=float, help="Field edge weight (default from config)")
@click.option("--out", type=click.Path(file_okay=False), required=True, help="Directory for before.graph and after.graph")
def gen_wheel_pair(
    n: Optional[int],
    p: Optional[float],
    q: Optional[float],
    seed: Optional[int],
    field_weight: Optional[float],
    out: str,
) -> None:
    """Two wheels sharing cycle and chords, with hubs 1 and 26."""
    with reporting_errors():
        cfg = load_config()
        params = {
            "n": cfg.wheel.n if n is None else n,
            "p": cfg.wheel.p if p is None else p,
            "q": cfg.wheel.q if q is None else q,
            "seed": cfg.seed if seed is None else seed,
            "field_weight": cfg.field_weight if field_weight is None else field_weight,
        }
        first, second = generate_wheel_pair(**params)
        out_dir = Path(out)
        save_graph(first, out_dir / "before.graph", _gen_metadata("wheel-pair", {**params, "hub": 1}))
        save_graph(second, out_dir / "after.graph", _gen_metadata("wheel-pair", {**params, "hub": 26}))
        console.print(f"[green]✓ Wrote {out_dir / 'before.graph'} and {out_dir / 'after.graph'}[/green]")


@gen.command(name="er")
@click.option("--n", type=click.IntRange(min=1), required=True, help="Number of nodes")
@click.option("--m", type=click.IntRange(min=0), required=True, help="Number of peer edges")
@click.option("--seed", type=int, help="Seed (default from config)")
@click.option("--field-weight", type=float, default=1.0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Graph file to write")
def gen_er(n: int, m: int, seed: Optional[int], field_weight: float, out: str) -> None:
    """Erdős-Rényi G(n, m) graph with every node joined to the field."""
    with reporting_errors():
        cfg = load_config()
        params = {"n": n, "m": m, "seed": cfg.seed if seed is None else seed, "field_weight": field_weight}
        g = erdos_renyi_graph(**params)
        save_graph(g, out, _gen_metadata("er", params))
        console.print(f"[green]✓ Wrote G(n, m) graph with {g.num_edges} edges to {out}[/green]")


@gen.command(name="tree")
@click.option("--n", type=click.IntRange(min=1), required=True, help="Number of non-field nodes")
@click.option("--seed", type=int, help="Seed (default from config)")
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Graph file to write")
def gen_tree(n: int, seed: Optional[int], out: str) -> None:
    """Uniform random tree on the field and n nodes, weights in [0.5, 2]."""
    with reporting_errors():
        cfg = load_config()
        params = {"n": n, "seed": cfg.seed if seed is None else seed}
        g = random_tree(**params)
        save_graph(g, out, _gen_metadata("tree", params))
        console.print(f"[green]✓ Wrote tree with {g.n} nodes to {out}[/green]")


@gen.command(name="sbm")
@click.option("--sizes", type=INT_LIST, help="Community sizes (default from config)")
@click.option("--mean-degree", type=float, help="Expected degree inside each community")
@click.option("--p-out", type=float, help="Edge probability between communities")
@click.option("--seed", type=int, help="Seed (default from config)")
@click.option("--field-weight", type=float, help="Field edge weight (default from config)")
@click.option("--out", type=click.Path(file_okay=False), required=True, help="Directory for graph.graph and communities.csv")
def gen_sbm(
    sizes: Optional[List[int]],
    mean_degree: Optional[float],
    p_out: Optional[float],
    seed: Optional[int],
    field_weight: Optional[float],
    out: str,
) -> None:
    """Block-model surrogate of a community-structured ego network."""
    with reporting_errors():
        cfg = load_config()
        params = {
            "sizes": list(sizes or cfg.surrogate.sizes),
            "mean_degree": cfg.surrogate.mean_degree if mean_degree is None else mean_degree,
            "p_out": cfg.surrogate.p_out if p_out is None else p_out,
            "field_weight": cfg.field_weight if field_weight is None else field_weight,
            "seed": cfg.seed if seed is None else seed,
        }
        g, labels = community_surrogate(**params)
        out_dir = Path(out)
        save_graph(g, out_dir / "graph.graph", _gen_metadata("sbm", params))
        save_communities(labels, out_dir / "communities.csv")
        console.print(
            f"[green]✓ Wrote {g.n} nodes in {labels.count} communities to {out_dir}[/green]"
        )


def main() -> None:
    """Main entry point for the CLI."""
    cli()


if __name__ == "__main__":
    main()
