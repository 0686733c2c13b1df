"""Seeded repetition, fusion ablation and grid search over a shared dataset.

Runs fan out over a thread pool and are merged back in submission order, so
results never depend on scheduling.
"""

from __future__ import annotations

import csv
import itertools
import json
import logging
import uuid
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np
from pydantic import ValidationError

from mmgnn.config import ConfigError, ModelConfig, TrainConfig
from mmgnn.graph.storage import Dataset
from mmgnn.models import Architecture, FusionKind, FusionMode, RunMetrics, SummaryRow
from mmgnn.training.trainer import TrainResult, train

logger = logging.getLogger(__name__)

GRID_KEYS = {
    "k": "model",
    "hidden": "model",
    "num_layers": "model",
    "learning_rate": "train",
    "weight_decay": "train",
}


@dataclass
class RunTask:
    name: str
    model: ModelConfig
    train: TrainConfig
    task_id: str = field(default_factory=lambda: uuid.uuid4().hex[:8])


@dataclass
class RunOutcome:
    task: RunTask
    metrics: Optional[RunMetrics] = None
    result: Optional[TrainResult] = None
    error: Optional[BaseException] = None

    @property
    def success(self) -> bool:
        return self.error is None


def seeded(model: ModelConfig, train_config: TrainConfig, offset: int) -> tuple[ModelConfig, TrainConfig]:
    """Shift both the init and the dropout seed by `offset`."""
    return (
        model.model_copy(update={"seed": model.seed + offset}),
        train_config.model_copy(update={"seed": train_config.seed + offset}),
    )


def run_parallel(
    tasks: Sequence[RunTask],
    dataset: Dataset,
    max_workers: int = 1,
    keep_models: bool = False,
) -> list[RunOutcome]:
    """Train every task; outcomes come back in task order whatever the completion order."""
    if not tasks:
        return []
    workers = max(1, min(len(tasks), max_workers))
    logger.info(f"Running {len(tasks)} training runs (max_workers={workers})")

    def _execute(task: RunTask) -> RunOutcome:
        result = train(task.model, task.train, dataset)
        return RunOutcome(task=task, metrics=result.metrics, result=result if keep_models else None)

    outcomes: dict[str, RunOutcome] = {}
    if workers == 1:
        for task in tasks:
            try:
                outcomes[task.task_id] = _execute(task)
            except Exception as e:
                logger.error(f"Run {task.name} (seed {task.train.seed}) raised: {e}")
                outcomes[task.task_id] = RunOutcome(task=task, error=e)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(_execute, task): task for task in tasks}
            for future in as_completed(futures):
                task = futures[future]
                try:
                    outcomes[task.task_id] = future.result()
                except Exception as e:
                    logger.error(f"Run {task.name} (seed {task.train.seed}) raised: {e}")
                    outcomes[task.task_id] = RunOutcome(task=task, error=e)

    return [outcomes[t.task_id] for t in tasks]


def raise_first_error(outcomes: Sequence[RunOutcome]) -> None:
    for outcome in outcomes:
        if outcome.error is not None:
            raise outcome.error


def summarize(name: str, accuracies: Sequence[float]) -> SummaryRow:
    """Sample mean and unbiased standard deviation (0 for a single run)."""
    values = np.asarray(accuracies, dtype=np.float64)
    std = float(np.std(values, ddof=1)) if values.size > 1 else 0.0
    return SummaryRow(
        name=name,
        runs=int(values.size),
        mean_accuracy=float(np.mean(values)),
        std_accuracy=std,
        accuracies=[float(v) for v in values],
    )


def repeat_runs(
    configs: Sequence[tuple[str, ModelConfig, TrainConfig]],
    n: int,
    dataset: Dataset,
    max_workers: int = 1,
    keep_models: bool = False,
) -> tuple[list[SummaryRow], list[RunOutcome]]:
    """Run each named config with seeds seed+0..n-1 and summarize test accuracy."""
    if n < 1:
        raise ValueError(f"repeat count must be >= 1, got {n}")
    tasks = [
        RunTask(name, *seeded(model, train_config, offset))
        for name, model, train_config in configs
        for offset in range(n)
    ]
    outcomes = run_parallel(tasks, dataset, max_workers, keep_models)
    raise_first_error(outcomes)

    rows = []
    for index, (name, _, _) in enumerate(configs):
        block = outcomes[index * n:(index + 1) * n]
        row = summarize(name, [o.metrics.test_accuracy for o in block])
        logger.info(f"{name}: {row.mean_accuracy:.4f} ± {row.std_accuracy:.4f} over {n} runs")
        rows.append(row)
    return rows, outcomes


def ablation_configs(model: ModelConfig) -> list[tuple[str, ModelConfig]]:
    """M-1..M-K, Ensemble, MLP and Attention variants of an MM-GNN config."""
    if model.architecture != Architecture.MMGNN:
        raise ConfigError(f"ablation needs the mmgnn architecture, got {model.architecture.value}")
    modes = [FusionMode.single(k) for k in range(1, model.k + 1)]
    modes += [FusionMode(kind=FusionKind.MEAN_ENSEMBLE), FusionMode(kind=FusionKind.MLP), FusionMode()]
    return [(mode.label, model.model_copy(update={"fusion": mode})) for mode in modes]


def run_ablation(
    model: ModelConfig,
    train_config: TrainConfig,
    dataset: Dataset,
    repeats: int = 1,
    max_workers: int = 1,
) -> list[SummaryRow]:
    configs = [(name, variant, train_config) for name, variant in ablation_configs(model)]
    rows, _ = repeat_runs(configs, repeats, dataset, max_workers)
    return rows


@dataclass
class GridResult:
    model: ModelConfig
    train: TrainConfig
    rows: list[dict[str, Any]]

    @property
    def best(self) -> dict[str, Any]:
        return max(self.rows, key=lambda r: r["val_accuracy"])


def search_grid(
    model: ModelConfig,
    train_config: TrainConfig,
    grid: dict[str, Sequence[Any]],
    dataset: Dataset,
    repeats: int = 1,
    max_workers: int = 1,
) -> GridResult:
    """Pick the combination with the best mean validation accuracy; ties keep the first."""
    unknown = sorted(set(grid) - set(GRID_KEYS))
    if unknown:
        raise ConfigError(f"unsupported grid keys: {unknown}")
    keys = list(grid)
    candidates: list[tuple[dict[str, Any], ModelConfig, TrainConfig]] = []
    for combo in itertools.product(*(grid[k] for k in keys)):
        point = dict(zip(keys, combo))
        model_update = {k: v for k, v in point.items() if GRID_KEYS[k] == "model"}
        train_update = {k: v for k, v in point.items() if GRID_KEYS[k] == "train"}
        try:
            candidate_model = ModelConfig.model_validate({**model.model_dump(), **model_update})
            candidate_train = TrainConfig.model_validate({**train_config.model_dump(), **train_update})
        except ValidationError as e:
            logger.warning(f"Skipping grid point {point}: {e.errors()[0]['msg']}")
            continue
        candidates.append((point, candidate_model, candidate_train))
    if not candidates:
        raise ConfigError("grid search has no valid combination")

    configs = [(json.dumps(p, sort_keys=True), m, t) for p, m, t in candidates]
    _, outcomes = repeat_runs(configs, repeats, dataset, max_workers)

    rows: list[dict[str, Any]] = []
    best_index = 0
    for index, (point, _, _) in enumerate(candidates):
        block = outcomes[index * repeats:(index + 1) * repeats]
        val = float(np.mean([o.metrics.best_val_accuracy for o in block]))
        test = float(np.mean([o.metrics.test_accuracy for o in block]))
        rows.append({**point, "val_accuracy": val, "test_accuracy": test})
        if val > rows[best_index]["val_accuracy"]:
            best_index = index
    _, best_model, best_train = candidates[best_index]
    logger.info(f"Grid search best: {rows[best_index]}")
    return GridResult(model=best_model, train=best_train, rows=rows)


# ---------------------------------------------------------------------------
# Output files
# ---------------------------------------------------------------------------

def write_metrics_jsonl(path: str | Path, metrics: RunMetrics) -> Path:
    """One JSON object per epoch; wall-clock time stays out."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for record in metrics.epochs:
            fh.write(json.dumps(record.model_dump(), sort_keys=True) + "\n")
    return path


def write_summary_csv(path: str | Path, rows: Sequence[SummaryRow]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["model", "runs", "mean_accuracy", "std_accuracy", "accuracies"])
        for row in rows:
            writer.writerow([
                row.name,
                row.runs,
                repr(row.mean_accuracy),
                repr(row.std_accuracy),
                ";".join(repr(a) for a in row.accuracies),
            ])
    return path


def write_grid_csv(path: str | Path, rows: Sequence[dict[str, Any]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]) if rows else [], lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    return path
