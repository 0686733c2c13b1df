"""MM-GNN CLI - train, analyze, ablate and verify from the command line."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

from pydantic import ValidationError
from rich.console import Console
from rich.logging import RichHandler
from rich.panel import Panel
from rich.table import Table

from mmgnn import __version__
from mmgnn.analysis import (
    AnalysisError,
    attention_summary,
    complexity_measure,
    moment_feature_gamma,
    statistic_grid,
)
from mmgnn.analysis.report import write_attention_csv, write_gamma, write_grid_csv, write_stats_csv
from mmgnn.analysis.complexity import ComplexityConfig
from mmgnn.autodiff.checkpoint import CheckpointError
from mmgnn.autodiff.tape import NonFiniteError, ShapeError, Tensor
from mmgnn.config import ConfigError, DatasetConfig, RunConfig, RuntimeSettings
from mmgnn.graph import (
    Dataset,
    GraphFormatError,
    RatioSplit,
    SplitError,
    SyntheticSpec,
    generate_theorem1_graph,
    load_graph,
    make_split,
    read_split,
    save_graph,
    write_split,
)
from mmgnn.model.network import MixMomentGNN
from mmgnn.models import Architecture, FusionKind, MomentKind, SplitRole, SummaryRow, format_real
from mmgnn.training import (
    DivergenceError,
    evaluate,
    repeat_runs,
    run_ablation,
    search_grid,
    summarize,
    train,
)
from mmgnn.training.runner import write_grid_csv as write_search_csv
from mmgnn.training.runner import write_metrics_jsonl, write_summary_csv
from mmgnn.training.trainer import representations
from mmgnn.verification import run_gradcheck, scaling_benchmark

console = Console()
logger = logging.getLogger("mmgnn")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERIC = 2

RUN_SPLIT_FILE = "split.tsv"

USAGE_ERRORS = (
    ValidationError,
    ConfigError,
    GraphFormatError,
    SplitError,
    FileNotFoundError,
    CheckpointError,
    AnalysisError,
    ShapeError,
)
NUMERIC_ERRORS = (DivergenceError, NonFiniteError)


def setup_logging(level: str = "INFO") -> None:
    logging.basicConfig(
        level=level.upper(),
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=console, rich_tracebacks=True)],
        force=True,
    )


def add_run_log(out_dir: Path) -> logging.Handler:
    """Mirror log records (with timestamps) into <out>/run.log."""
    out_dir.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(out_dir / "run.log", mode="w", encoding="utf-8")
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
    logging.getLogger().addHandler(handler)
    return handler


# ---------------------------------------------------------------------------
# Config + dataset resolution
# ---------------------------------------------------------------------------

def _set(tree: dict[str, Any], dotted: str, value: Any) -> None:
    *parents, leaf = dotted.split(".")
    for key in parents:
        tree = tree.setdefault(key, {})
    tree[leaf] = value


def effective_config(args: argparse.Namespace) -> RunConfig:
    """File config (or a dataset-dir default) with CLI flags applied, re-validated."""
    if getattr(args, "config", None):
        config = RunConfig.load(args.config)
    elif getattr(args, "dataset", None):
        config = RunConfig(dataset=DatasetConfig(path=args.dataset))
    else:
        raise ConfigError("either --config or a dataset directory is required")

    raw = config.model_dump(mode="json")
    overrides = {
        "output_dir": getattr(args, "out", None),
        "train.repeats": getattr(args, "repeats", None),
        "model.k": getattr(args, "k", None),
        "model.moment": getattr(args, "moment", None),
        "model.fusion": getattr(args, "fusion", None),
        "analysis.bins": getattr(args, "bins", None),
        "analysis.p": getattr(args, "p", None),
    }
    seed = getattr(args, "seed", None)
    if seed is not None:
        overrides["model.seed"] = seed
        overrides["train.seed"] = seed
    if getattr(args, "self_loops", False):
        overrides["dataset.self_loops"] = True
    for key, value in overrides.items():
        if value is not None:
            _set(raw, key, value)
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigError(f"invalid configuration: {e}") from e


def load_dataset(config: RunConfig, need_split: bool = True) -> Dataset:
    source = config.dataset
    if source.synthetic is not None:
        dataset = generate_theorem1_graph(source.synthetic)
    else:
        dataset = load_graph(source.path)
    if need_split and (config.split is not None or dataset.split is None):
        policy = config.default_split()
        dataset = dataset.with_split(make_split(dataset.labels, policy, config.train.seed))
        logger.info(f"Split ({policy.kind}, seed {config.train.seed}): {dataset.split.counts()}")
    if source.self_loops:
        dataset = dataset.with_self_loops()
    logger.info(
        f"Dataset '{dataset.name}': {dataset.graph.num_nodes} nodes, {dataset.graph.num_edges} edges, "
        f"{dataset.feature_dim} features, {dataset.num_classes} classes"
    )
    return dataset


def _prepare(args: argparse.Namespace) -> tuple[RunConfig, Path]:
    config = effective_config(args)
    out_dir = Path(config.output_dir)
    add_run_log(out_dir)
    config.dump(out_dir / "config.json")
    return config, out_dir


def _parse_grid(items: Sequence[str]) -> dict[str, list[Any]]:
    grid: dict[str, list[Any]] = {}
    for item in items:
        key, sep, values = item.partition("=")
        if not sep or not values:
            raise ConfigError(f"grid entries look like 'k=1,2,3', got '{item}'")
        parsed: list[Any] = []
        for token in values.split(","):
            try:
                parsed.append(int(token))
            except ValueError:
                try:
                    parsed.append(float(token))
                except ValueError as e:
                    raise ConfigError(f"grid value '{token}' for '{key}' is not numeric") from e
        grid[key.strip()] = parsed
    return grid


def _summary_table(title: str, rows: Sequence[SummaryRow]) -> Table:
    table = Table(title=title)
    table.add_column("Model", style="cyan")
    table.add_column("Runs", justify="right")
    table.add_column("Test accuracy", justify="right")
    for row in rows:
        table.add_row(row.name, str(row.runs), f"{100 * row.mean_accuracy:.2f} ± {100 * row.std_accuracy:.2f}")
    return table


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_train(args: argparse.Namespace) -> int:
    """Train (optionally after a grid search), evaluate and write run artifacts."""
    config, out_dir = _prepare(args)
    dataset = load_dataset(config)
    threads = RuntimeSettings.from_env().threads
    model_config, train_config = config.model, config.train

    if args.grid:
        result = search_grid(model_config, train_config, _parse_grid(args.grid), dataset, train_config.repeats, threads)
        write_search_csv(out_dir / "search.csv", result.rows)
        model_config, train_config = result.model, result.train
        config = config.model_copy(update={"model": model_config, "train": train_config})
        config.dump(out_dir / "config.json")

    if model_config.architecture == Architecture.MMGNN:
        name = model_config.fusion.label
    else:
        name = model_config.architecture.value
    if train_config.repeats > 1:
        rows, outcomes = repeat_runs(
            [(name, model_config, train_config)], train_config.repeats, dataset, threads, keep_models=True
        )
        first = outcomes[0].result
    else:
        first = train(model_config, train_config, dataset)
        rows = [summarize(name, [first.metrics.test_accuracy])]

    write_metrics_jsonl(out_dir / "metrics.jsonl", first.metrics)
    write_split(out_dir / RUN_SPLIT_FILE, dataset.split)
    write_summary_csv(out_dir / "summary.csv", rows)
    first.model.save(out_dir / "model.ckpt")
    if model_config.architecture == Architecture.MMGNN and model_config.fusion.kind == FusionKind.ATTENTION:
        forward = first.model.forward(dataset.graph, _features(dataset))
        write_attention_csv(out_dir / "attention.csv", attention_summary(forward.attention))

    console.print(_summary_table("Training summary", rows))
    console.print(Panel(
        f"[bold green]Training complete[/bold green]\n\n"
        f"Best epoch: {first.metrics.best_epoch}\n"
        f"Validation accuracy: {first.metrics.best_val_accuracy:.4f}\n"
        f"Test accuracy: {first.metrics.test_accuracy:.4f}\n"
        f"Output: {out_dir}",
        border_style="green",
        expand=False,
    ))
    return EXIT_OK


def _features(dataset: Dataset) -> Tensor:
    return Tensor(dataset.features.values)


def cmd_analyze(args: argparse.Namespace) -> int:
    """Neighborhood statistics, Fisher / MI grids and complexity values."""
    config, out_dir = _prepare(args)
    dataset = load_dataset(config, need_split=False)
    analysis = config.analysis
    x = dataset.features.values
    names = list(dataset.features.names)

    write_stats_csv(out_dir / "stats.csv", dataset, analysis.statistics)
    fisher = statistic_grid(
        dataset.graph, x, dataset.labels, analysis.statistics, "fisher",
        ordered=analysis.ordered_fisher, dimension_names=names,
    )
    mi = statistic_grid(
        dataset.graph, x, dataset.labels, analysis.statistics, "mi",
        bins=analysis.bins, dimension_names=names,
    )
    write_grid_csv(out_dir / "fisher.csv", fisher)
    write_grid_csv(out_dir / "mi.csv", mi)

    cfg = ComplexityConfig(p=analysis.p)
    gamma = {
        "mean": moment_feature_gamma(dataset.graph, x, dataset.labels, MomentKind.ORIGIN, 1, cfg),
        f"central:{analysis.gamma_order}": moment_feature_gamma(
            dataset.graph, x, dataset.labels, MomentKind.CENTRAL, analysis.gamma_order, cfg
        ),
    }
    if args.checkpoint:
        model = MixMomentGNN.load(args.checkpoint)
        gamma["checkpoint"] = complexity_measure(representations(model, dataset), dataset.labels, cfg)
        forward = model.forward(dataset.graph, _features(dataset))
        if forward.attention:
            write_attention_csv(out_dir / "attention.csv", attention_summary(forward.attention))
    write_gamma(out_dir / "gamma.txt", gamma)

    table = Table(title=f"Dimension-averaged discrimination ({dataset.name})")
    table.add_column("Statistic", style="cyan")
    table.add_column("Fisher", justify="right")
    table.add_column("MI (nats)", justify="right")
    for i, stat in enumerate(fisher.statistics):
        table.add_row(stat, f"{fisher.averaged[i]:.6g}", f"{mi.averaged[i]:.6g}")
    console.print(table)
    for key, value in gamma.items():
        console.print(f"[bold]Γ[{key}][/bold] = {format_real(value)}")
    return EXIT_OK


def _parse_scales(items: Sequence[str]) -> list[float]:
    """Accept '1,9', '1 9' or a mix of both."""
    tokens = [t for item in items for t in item.split(",") if t.strip()]
    try:
        return [float(t) for t in tokens]
    except ValueError as e:
        raise ConfigError(f"scales must be numbers, got {','.join(items)}") from e


def cmd_synth(args: argparse.Namespace) -> int:
    """Write a synthetic equal-means / distinct-scales dataset directory."""
    scales = _parse_scales(args.scales)
    if args.classes is not None and args.classes != len(scales):
        raise ConfigError(f"--classes {args.classes} but {len(scales)} scales given")
    spec = SyntheticSpec(
        nodes_per_class=args.nodes_per_class,
        num_classes=len(scales),
        feature_dim=args.dim,
        class_covariance_scales=scales,
        neighbors_per_node=args.neighbors,
        seed=args.seed,
    )
    dataset = generate_theorem1_graph(spec)
    dataset = dataset.with_split(make_split(dataset.labels, RatioSplit(), spec.seed))
    path = save_graph(args.out, dataset)
    console.print(Panel(
        f"[bold green]Synthetic dataset written[/bold green]\n\n"
        f"Nodes: {dataset.graph.num_nodes}\nEdges: {dataset.graph.num_edges}\nPath: {path}",
        border_style="green",
        expand=False,
    ))
    return EXIT_OK


def cmd_gradcheck(args: argparse.Namespace) -> int:
    report = run_gradcheck(seed=args.seed, coordinates=args.coordinates)
    color = "green" if report.passed else "red"
    console.print(Panel(
        f"[bold {color}]Gradient check {'passed' if report.passed else 'FAILED'}[/bold {color}]\n\n"
        f"Coordinates: {report.coordinates}\n"
        f"Max relative error: {report.max_relative_error:.3e} (tolerance {report.tolerance:.0e})\n"
        f"Worst parameter: {report.worst_parameter}",
        border_style=color,
        expand=False,
    ))
    return EXIT_OK if report.passed else EXIT_NUMERIC


def cmd_ablate(args: argparse.Namespace) -> int:
    """Fusion-mode ablation: M-1..M-K, Ensemble, MLP, Attention with shared seeds."""
    config, out_dir = _prepare(args)
    dataset = load_dataset(config)
    rows = run_ablation(
        config.model, config.train, dataset, config.train.repeats, RuntimeSettings.from_env().threads
    )
    write_summary_csv(out_dir / "ablation.csv", rows)
    console.print(_summary_table("Fusion ablation", rows))
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    """Forward+backward timing against edge count, with a linear fit."""
    report = scaling_benchmark(
        edge_counts=args.edges, num_nodes=args.nodes, dim=args.dim, k=args.k, seed=args.seed
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    with (out_dir / "scaling.csv").open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["num_edges", "seconds"])
        for point in report.points:
            writer.writerow([point.num_edges, repr(point.seconds)])

    table = Table(title="Scaling benchmark")
    table.add_column("|E|", justify="right", style="cyan")
    table.add_column("Seconds", justify="right")
    for point in report.points:
        table.add_row(str(point.num_edges), f"{point.seconds:.4f}")
    console.print(table)
    color = "green" if report.passed else "red"
    console.print(
        f"[{color}]time = {report.intercept:.4g} + {report.slope:.4g}·|E|, R² = {report.r_squared:.4f}[/{color}]"
    )
    return EXIT_OK if report.passed else EXIT_NUMERIC


def cmd_evaluate(args: argparse.Namespace) -> int:
    """Accuracy of a checkpoint on the split it was trained with, when that split sits beside it."""
    config = effective_config(args)
    trained_split = Path(args.checkpoint).with_name(RUN_SPLIT_FILE)
    if trained_split.is_file():
        dataset = load_dataset(config, need_split=False)
        dataset = dataset.with_split(read_split(trained_split, dataset.graph.num_nodes))
        logger.info(f"Using the training split from {trained_split}")
    else:
        dataset = load_dataset(config)
    accuracy = evaluate(args.checkpoint, dataset, SplitRole(args.role))
    console.print(f"[bold]{args.role} accuracy:[/bold] {accuracy:.4f}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _run_flags(parser: argparse.ArgumentParser, *, dataset_arg: bool = False) -> None:
    parser.add_argument("--config", help="Run config JSON file")
    if dataset_arg:
        parser.add_argument("dataset", nargs="?", help="Dataset directory (when no --config is given)")
    parser.add_argument("--out", help="Output directory")
    parser.add_argument("--seed", type=int, help="Seed for split, init and dropout")
    parser.add_argument("--self-loops", action="store_true", help="Re-add self loops after loading")


def _model_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--repeats", type=int, help="Runs per config (seeds seed..seed+n-1)")
    parser.add_argument("--k", type=int, help="Largest moment order")
    parser.add_argument("--moment", choices=[m.value for m in MomentKind], help="Moment kind")
    parser.add_argument("--fusion", help="attention | mlp | mean | single:K")


def build_parser() -> argparse.ArgumentParser:
    settings = RuntimeSettings.from_env()
    parser = argparse.ArgumentParser(prog="mmgnn", description="Mix-moment graph neural networks")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--log-level", default=settings.log_level, help="Logging level")
    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    train_parser = subparsers.add_parser("train", parents=[common], help="Train and evaluate a model")
    _run_flags(train_parser, dataset_arg=True)
    _model_flags(train_parser)
    train_parser.add_argument("--grid", action="append", default=[], metavar="KEY=V1,V2",
                              help="Grid-search values before training (repeatable)")
    train_parser.set_defaults(func=cmd_train)

    analyze_parser = subparsers.add_parser("analyze", parents=[common], help="Neighborhood statistic analysis")
    _run_flags(analyze_parser, dataset_arg=True)
    analyze_parser.add_argument("--bins", type=int, help="Equal-frequency bins for MI")
    analyze_parser.add_argument("--p", type=float, help="Norm order for the complexity measure")
    analyze_parser.add_argument("--checkpoint", help="Also measure this model's representations")
    analyze_parser.set_defaults(func=cmd_analyze)

    synth_parser = subparsers.add_parser("synth", parents=[common], help="Write a synthetic dataset")
    synth_parser.add_argument("--out", required=True, help="Dataset directory to write")
    synth_parser.add_argument("--classes", type=int, help="Number of classes (must match the number of scales)")
    synth_parser.add_argument("--per-class", "--nodes-per-class", dest="nodes_per_class", type=int, default=1000)
    synth_parser.add_argument("--dim", type=int, default=4)
    synth_parser.add_argument("--neighbors", type=int, default=10)
    synth_parser.add_argument("--scales", nargs="+", default=["1,9"],
                              help="Per-class isotropic covariance scales, e.g. 1,9")
    synth_parser.add_argument("--seed", type=int, default=0)
    synth_parser.set_defaults(func=cmd_synth)

    grad_parser = subparsers.add_parser("gradcheck", parents=[common], help="Finite-difference gradient check")
    grad_parser.add_argument("--seed", type=int, default=0)
    grad_parser.add_argument("--coordinates", type=int, default=200)
    grad_parser.set_defaults(func=cmd_gradcheck)

    ablate_parser = subparsers.add_parser("ablate", parents=[common], help="Fusion-mode ablation")
    _run_flags(ablate_parser, dataset_arg=True)
    _model_flags(ablate_parser)
    ablate_parser.set_defaults(func=cmd_ablate)

    bench_parser = subparsers.add_parser("bench", parents=[common], help="Edge-count scaling benchmark")
    bench_parser.add_argument("--edges", type=int, nargs="+", default=[10_000, 100_000, 1_000_000])
    bench_parser.add_argument("--nodes", type=int, default=10_000)
    bench_parser.add_argument("--dim", type=int, default=16)
    bench_parser.add_argument("--k", type=int, default=3)
    bench_parser.add_argument("--seed", type=int, default=0)
    bench_parser.add_argument("--out", default="runs/bench")
    bench_parser.set_defaults(func=cmd_bench)

    eval_parser = subparsers.add_parser("evaluate", parents=[common], help="Accuracy of a saved checkpoint")
    eval_parser.add_argument("checkpoint", help="Checkpoint written by 'train'")
    _run_flags(eval_parser, dataset_arg=True)
    eval_parser.add_argument("--role", choices=["train", "val", "test"], default="test")
    eval_parser.set_defaults(func=cmd_evaluate)

    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse, dispatch and map failures to exit codes."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if not e.code else EXIT_USAGE
    if not args.command:
        parser.print_help()
        return EXIT_USAGE

    setup_logging(args.log_level)
    try:
        return args.func(args)
    except USAGE_ERRORS as e:
        console.print(Panel(f"[bold red]Error[/bold red]\n\n{e}", border_style="red", expand=False))
        return EXIT_USAGE
    except NUMERIC_ERRORS as e:
        console.print(Panel(f"[bold red]Numeric failure[/bold red]\n\n{e}", border_style="red", expand=False))
        return EXIT_NUMERIC
    finally:
        for handler in list(logging.getLogger().handlers):
            if isinstance(handler, logging.FileHandler):
                logging.getLogger().removeHandler(handler)
                handler.close()


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
