"""How well a scalar statistic separates node classes: Fisher index and mutual information."""

from __future__ import annotations

import itertools
import logging
import warnings
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
from scipy.special import rel_entr

from mmgnn.analysis.statistics import AnalysisError, neighborhood_statistics
from mmgnn.graph.storage import LabelVector, SparseGraph
from mmgnn.models import StatisticKind

logger = logging.getLogger(__name__)

DEFAULT_BINS = 16


def _present(values: np.ndarray, labels: LabelVector) -> tuple[np.ndarray, np.ndarray]:
    values = np.asarray(values, dtype=np.float64)
    if values.shape != labels.labels.shape:
        raise AnalysisError(f"{values.size} values for {len(labels)} labels")
    keep = ~np.isnan(values)
    return values[keep], labels.labels[keep]


def fisher_index(values: np.ndarray, labels: LabelVector, ordered: bool = False) -> float:
    """Sum over class pairs of (mu_i - mu_j)^2 / (var_i + var_j); missing values dropped.

    A pair with zero pooled variance contributes 0 when the means agree and
    +inf otherwise.
    """
    values, y = _present(values, labels)
    classes = [c for c in range(labels.num_classes) if np.count_nonzero(y == c) > 0]
    if len(classes) < 2:
        raise AnalysisError("fisher_index needs at least 2 classes")
    small = [c for c in classes if np.count_nonzero(y == c) < 2]
    if small:
        raise AnalysisError(f"classes {small} have fewer than 2 samples")

    means = {c: float(np.mean(values[y == c])) for c in classes}
    variances = {c: float(np.var(values[y == c])) for c in classes}
    total = 0.0
    for a, b in itertools.combinations(classes, 2):
        gap = (means[a] - means[b]) ** 2
        pooled = variances[a] + variances[b]
        if pooled == 0.0:
            if gap == 0.0:
                continue
            logger.warning(f"Fisher pair ({a}, {b}) has zero variance and distinct means; index is +inf")
            return float("inf")
        total += gap / pooled
    return 2.0 * total if ordered else total


def equal_frequency_bins(values: np.ndarray, bins: int) -> np.ndarray:
    """Bin id per value from quantile edges; duplicate edges collapse."""
    interior = np.unique(np.quantile(values, np.arange(1, bins) / bins))
    return np.searchsorted(interior, values, side="right")


def mutual_information(values: np.ndarray, labels: LabelVector, bins: int = DEFAULT_BINS) -> float:
    """Plug-in MI in nats between equal-frequency bins of `values` and the labels."""
    if bins < 2:
        raise AnalysisError(f"bins must be >= 2, got {bins}")
    values, y = _present(values, labels)
    if values.size < 2 * bins:
        raise AnalysisError(f"{values.size} samples are too few for {bins} bins (need {2 * bins})")

    x = equal_frequency_bins(values, bins)
    width = labels.num_classes
    joint = np.bincount(x * width + y, minlength=(int(x.max()) + 1) * width).astype(np.float64)
    p_xy = joint.reshape(-1, width) / values.size
    p_x = p_xy.sum(axis=1, keepdims=True)
    p_y = p_xy.sum(axis=0, keepdims=True)
    return max(float(np.sum(rel_entr(p_xy, p_x * p_y))), 0.0)


@dataclass
class StatisticGrid:
    """Statistic × feature-dimension grid of Fisher or MI values."""
    statistics: list[str]
    dimensions: list[str]
    values: np.ndarray  # [len(statistics) × len(dimensions)]

    @property
    def averaged(self) -> np.ndarray:
        """Mean over feature dimensions per statistic (NaN cells skipped)."""
        return np.array([np.nanmean(row) if np.any(~np.isnan(row)) else np.nan for row in self.values])


def statistic_grid(
    g: SparseGraph,
    x: np.ndarray,
    labels: LabelVector,
    kinds: Sequence[StatisticKind],
    metric: Literal["fisher", "mi"],
    bins: int = DEFAULT_BINS,
    ordered: bool = False,
    dimension_names: Sequence[str] | None = None,
    average_first: bool = False,
) -> StatisticGrid:
    """Score every (statistic, dimension) cell.

    With `average_first` the statistic is first averaged over all feature
    dimensions per node and scored once, giving a single column.
    """
    x = np.asarray(x, dtype=np.float64)
    names = list(dimension_names) if dimension_names is not None else [f"x{i}" for i in range(x.shape[1])]
    if average_first:
        names = ["all"]

    def score(column: np.ndarray) -> float:
        if metric == "fisher":
            return fisher_index(column, labels, ordered)
        return mutual_information(column, labels, bins)

    rows = []
    for kind in kinds:
        stats = neighborhood_statistics(g, x, kind)
        if average_first:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)  # zero-degree rows are all-NaN
                stats = np.nanmean(stats, axis=1, keepdims=True)
        rows.append([score(stats[:, d]) for d in range(stats.shape[1])])
    logger.info(f"{metric} grid: {len(kinds)} statistics × {len(names)} dimensions")
    return StatisticGrid(statistics=[str(k) for k in kinds], dimensions=names, values=np.array(rows, dtype=np.float64))
