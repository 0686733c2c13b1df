from mmgnn.training.optim import Adam, AdamState, adam_step
from mmgnn.training.runner import (
    GridResult,
    RunOutcome,
    RunTask,
    ablation_configs,
    repeat_runs,
    run_ablation,
    run_parallel,
    search_grid,
    summarize,
)
from mmgnn.training.trainer import DivergenceError, TrainResult, accuracy, evaluate, train

__all__ = [
    "Adam",
    "AdamState",
    "DivergenceError",
    "GridResult",
    "RunOutcome",
    "RunTask",
    "TrainResult",
    "ablation_configs",
    "accuracy",
    "adam_step",
    "evaluate",
    "repeat_runs",
    "run_ablation",
    "run_parallel",
    "search_grid",
    "summarize",
    "train",
]
