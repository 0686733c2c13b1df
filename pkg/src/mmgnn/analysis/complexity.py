"""Class-separability complexity of representations and the truncated-moment error bound."""

from __future__ import annotations

import logging
import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from mmgnn.analysis.statistics import AnalysisError
from mmgnn.autodiff.tape import Tensor
from mmgnn.graph.storage import GraphFormatError, LabelVector, SparseGraph
from mmgnn.model.moments import raw_moment
from mmgnn.models import MomentKind

logger = logging.getLogger(__name__)


class ComplexityConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    p: float = Field(default=2.0, ge=1.0)


class DeviationBound(BaseModel):
    model_config = ConfigDict(extra="forbid")

    epsilon: float  # radius of the t-neighborhood around 0
    c: float = Field(gt=0.0)  # bound on |x|
    k: int = Field(ge=1)


def _norm(v: np.ndarray, p: float) -> np.ndarray:
    return np.sum(np.abs(v) ** p, axis=-1) ** (1.0 / p)


def complexity_measure(h: np.ndarray, labels: LabelVector, cfg: ComplexityConfig | None = None) -> float:
    """Mean over classes of max_j (S_i + S_j) / M_ij.

    S_i is the p-norm spread of class i around its mean and M_ij the p-norm
    distance between class means. Coinciding means give +inf.
    """
    p = (cfg or ComplexityConfig()).p
    h = np.asarray(h, dtype=np.float64)
    if h.ndim == 1:
        h = h[:, None]
    if h.shape[0] != len(labels):
        raise AnalysisError(f"{h.shape[0]} representations for {len(labels)} labels")
    classes = [c for c in range(labels.num_classes) if np.any(labels.labels == c)]
    if len(classes) < 2:
        raise AnalysisError("complexity_measure needs at least 2 classes")

    means = np.stack([h[labels.labels == c].mean(axis=0) for c in classes])
    spreads = np.array([
        np.mean(np.sum(np.abs(h[labels.labels == c] - means[i]) ** p, axis=1)) ** (1.0 / p)
        for i, c in enumerate(classes)
    ])

    worst = []
    for i in range(len(classes)):
        ratios = []
        for j in range(len(classes)):
            if i == j:
                continue
            gap = float(_norm(means[i] - means[j], p))
            if gap == 0.0:
                logger.warning(f"Classes {classes[i]} and {classes[j]} share a mean; complexity is +inf")
                return float("inf")
            ratios.append((spreads[i] + spreads[j]) / gap)
        worst.append(max(ratios))
    return float(np.mean(worst))


def deviation_bound(b: DeviationBound) -> float:
    """(|epsilon|·c)^(k+1) / (k+1)!: the Lagrange remainder after k moments."""
    return (abs(b.epsilon) * b.c) ** (b.k + 1) / math.factorial(b.k + 1)


def empirical_remainder(values: np.ndarray, t: float, k: int) -> float:
    """|t^(k+1)·E[X^(k+1)]| / (k+1)! estimated from samples."""
    if k < 1:
        raise AnalysisError(f"order must be >= 1, got {k}")
    values = np.asarray(values, dtype=np.float64).ravel()
    if values.size == 0:
        raise AnalysisError("empirical_remainder needs at least one sample")
    return abs(t ** (k + 1) * float(np.mean(values ** (k + 1)))) / math.factorial(k + 1)


def moment_feature_gamma(
    g: SparseGraph,
    x: np.ndarray,
    labels: LabelVector,
    kind: MomentKind,
    k: int,
    cfg: ComplexityConfig | None = None,
    eps: float = 0.0,
) -> float:
    """Complexity of the raw (root-normalized, unprojected) k-th neighborhood moment features."""
    features = raw_moment(g, Tensor(np.asarray(x, dtype=np.float64)), k, kind, eps).values
    isolated = g.degrees == 0
    if np.any(isolated):
        keep = ~isolated
        try:
            labels = LabelVector(labels.labels[keep], labels.num_classes)
        except GraphFormatError as e:
            raise AnalysisError(f"isolated nodes removed a whole class: {e}") from e
        features = features[keep]
    return complexity_measure(features, labels, cfg)
