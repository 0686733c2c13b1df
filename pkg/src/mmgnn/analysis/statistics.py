"""Per-node statistics of the neighbors' feature values.

All moments use population (1/n) denominators. Nodes without neighbors get
NaN. Standardized moments (skewness included) of a constant neighborhood are
0 by convention.
"""

from __future__ import annotations

import numpy as np

from mmgnn.graph.storage import SparseGraph
from mmgnn.models import StatisticFamily, StatisticKind


class AnalysisError(ValueError):
    """Raised when an analysis input cannot support the requested estimate."""


def _as_matrix(g: SparseGraph, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] != g.num_nodes:
        raise AnalysisError(f"features of shape {x.shape} do not match {g.num_nodes} nodes")
    return x


def _central(g: SparseGraph, x: np.ndarray, mu: np.ndarray, order: int) -> np.ndarray:
    deviations = x[g.col_indices] - mu[g.edge_rows]
    return np.asarray(g.edge_mean @ deviations**order)


def _standardized(central: np.ndarray, variance: np.ndarray, order: int) -> np.ndarray:
    out = np.zeros_like(central)
    spread = variance > 0
    out[spread] = central[spread] / variance[spread] ** (order / 2.0)
    return out


def neighborhood_statistics(g: SparseGraph, x: np.ndarray, kind: StatisticKind) -> np.ndarray:
    """`kind` over every node's neighbor multiset, for all feature columns at once: [n × D]."""
    x = _as_matrix(g, x)
    family = kind.family
    mu = np.asarray(g.mean_operator @ x)

    if family == StatisticFamily.MEAN:
        out = mu
    elif family == StatisticFamily.ORIGIN_MOMENT:
        out = np.asarray(g.mean_operator @ x**kind.order)
    elif family == StatisticFamily.VARIANCE:
        out = _central(g, x, mu, 2)
    elif family == StatisticFamily.CENTRAL_MOMENT:
        out = _central(g, x, mu, kind.order)
    else:
        order = 3 if family == StatisticFamily.SKEWNESS else kind.order
        out = _standardized(_central(g, x, mu, order), _central(g, x, mu, 2), order)

    out = np.array(out, dtype=np.float64)
    out[g.degrees == 0] = np.nan
    return out


def neighborhood_statistic(g: SparseGraph, x: np.ndarray, dim: int, kind: StatisticKind) -> np.ndarray:
    x = _as_matrix(g, x)
    if not 0 <= dim < x.shape[1]:
        raise AnalysisError(f"dimension {dim} out of range for {x.shape[1]} features")
    return neighborhood_statistics(g, x[:, dim], kind)[:, 0]
