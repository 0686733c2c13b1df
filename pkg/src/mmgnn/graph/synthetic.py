"""Synthetic graphs.

`generate_theorem1_graph` builds classes whose neighborhood feature
distributions are isotropic Gaussians N(mu_c, s_c * I). With identical means
and distinct scales, every mean-only aggregator sees the same expected
representation for all classes while the second central moment separates them.
"""

from __future__ import annotations

import logging
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from mmgnn.graph.storage import Dataset, FeatureMatrix, GraphFormatError, LabelVector, SparseGraph
from mmgnn.seeding import SYNTH_STREAM, rng_for

logger = logging.getLogger(__name__)


class SyntheticSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    nodes_per_class: int = Field(default=1000, ge=2)
    num_classes: int = Field(default=2, ge=1)
    feature_dim: int = Field(default=4, ge=1)
    class_means: Optional[list[list[float]]] = None  # defaults to all-zero means
    class_covariance_scales: list[float] = Field(default_factory=lambda: [1.0, 9.0])
    neighbors_per_node: int = Field(default=10, ge=1)
    seed: int = 0

    @model_validator(mode="after")
    def _check_shapes(self) -> SyntheticSpec:
        if len(self.class_covariance_scales) != self.num_classes:
            raise ValueError(
                f"{len(self.class_covariance_scales)} covariance scales for {self.num_classes} classes"
            )
        if any(s <= 0 for s in self.class_covariance_scales):
            raise ValueError("covariance scales must be positive")
        if self.class_means is not None:
            if len(self.class_means) != self.num_classes or any(
                len(row) != self.feature_dim for row in self.class_means
            ):
                raise ValueError(f"class_means must be {self.num_classes} x {self.feature_dim}")
        if self.nodes_per_class < self.neighbors_per_node:
            raise ValueError(
                f"nodes_per_class={self.nodes_per_class} < neighbors_per_node={self.neighbors_per_node}"
            )
        return self

    def means(self) -> np.ndarray:
        if self.class_means is None:
            return np.zeros((self.num_classes, self.feature_dim))
        return np.asarray(self.class_means, dtype=np.float64)


def generate_theorem1_graph(spec: SyntheticSpec) -> Dataset:
    """Class-homogeneous neighborhoods with Gaussian features per class."""
    rng = rng_for(spec.seed, SYNTH_STREAM)
    per = spec.nodes_per_class
    n = per * spec.num_classes
    labels = np.repeat(np.arange(spec.num_classes, dtype=np.int64), per)

    means = spec.means()
    stds = np.sqrt(np.asarray(spec.class_covariance_scales, dtype=np.float64))
    noise = rng.standard_normal((n, spec.feature_dim))
    features = means[labels] + stds[labels, None] * noise

    wanted = min(spec.neighbors_per_node, per - 1)
    edges = np.empty((n * wanted, 2), dtype=np.int64)
    for node in range(n):
        base = labels[node] * per
        # sample among the other per-1 class members, skipping the node itself
        picks = rng.choice(per - 1, size=wanted, replace=False)
        local = node - base
        picks = base + picks + (picks >= local)
        edges[node * wanted:(node + 1) * wanted, 0] = node
        edges[node * wanted:(node + 1) * wanted, 1] = picks

    graph = SparseGraph.from_edges(n, edges)
    logger.info(
        f"Synthetic graph: {spec.num_classes} classes x {per} nodes, "
        f"scales={spec.class_covariance_scales}, {graph.num_edges} directed edges"
    )
    return Dataset(
        graph=graph,
        features=FeatureMatrix(features, tuple(f"x{i}" for i in range(spec.feature_dim))),
        labels=LabelVector(labels, spec.num_classes),
        name="synthetic",
    )


def random_graph(num_nodes: int, num_edges: int, seed: int = 0) -> SparseGraph:
    """Uniform random symmetric graph with about `num_edges` stored (directed) edges."""
    if num_nodes < 2:
        raise GraphFormatError("random graphs need at least 2 nodes")
    rng = rng_for(seed, SYNTH_STREAM)
    pairs = rng.integers(0, num_nodes, size=(max(num_edges // 2, 1), 2))
    return SparseGraph.from_edges(num_nodes, pairs)
