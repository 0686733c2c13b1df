"""CSV / text writers for analysis outputs. Infinite sentinels are written as 'inf'."""

from __future__ import annotations

import csv
import warnings
from pathlib import Path
from typing import Sequence

import numpy as np

from mmgnn.analysis.discrimination import StatisticGrid
from mmgnn.analysis.statistics import neighborhood_statistics
from mmgnn.graph.storage import Dataset
from mmgnn.models import StatisticKind, format_real


def _writer(path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    fh = path.open("w", encoding="utf-8", newline="")
    return fh, csv.writer(fh, lineterminator="\n")


def write_stats_csv(path: str | Path, dataset: Dataset, kinds: Sequence[StatisticKind]) -> Path:
    """node × statistic, each statistic averaged over feature dimensions."""
    path = Path(path)
    columns = []
    for kind in kinds:
        stats = neighborhood_statistics(dataset.graph, dataset.features.values, kind)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            columns.append(np.nanmean(stats, axis=1))
    fh, writer = _writer(path)
    with fh:
        writer.writerow(["node", "label"] + [str(k) for k in kinds])
        for node in range(dataset.graph.num_nodes):
            writer.writerow(
                [node, int(dataset.labels.labels[node])] + [format_real(c[node]) for c in columns]
            )
    return path


def write_grid_csv(path: str | Path, grid: StatisticGrid) -> Path:
    """statistic × dimension grid with a trailing dimension-average column."""
    path = Path(path)
    averaged = grid.averaged
    fh, writer = _writer(path)
    with fh:
        writer.writerow(["statistic"] + grid.dimensions + ["average"])
        for i, name in enumerate(grid.statistics):
            writer.writerow([name] + [format_real(v) for v in grid.values[i]] + [format_real(averaged[i])])
    return path


def write_gamma(path: str | Path, gamma: dict[str, float]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(f"{name}\t{format_real(v)}\n" for name, v in gamma.items()), encoding="utf-8")
    return path


def write_attention_csv(path: str | Path, summary: np.ndarray) -> Path:
    path = Path(path)
    fh, writer = _writer(path)
    with fh:
        writer.writerow(["layer"] + [f"order{k}" for k in range(1, summary.shape[1] + 1)])
        for layer, row in enumerate(summary):
            writer.writerow([layer] + [format_real(v) for v in row])
    return path
