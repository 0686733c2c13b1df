"""Self-checks: finite-difference gradient check on a canned graph, and the edge-count scaling benchmark."""

from __future__ import annotations

import logging
import time
from typing import Sequence

import numpy as np

from mmgnn.autodiff.gradcheck import gradient_errors
from mmgnn.autodiff.ops import softmax_cross_entropy
from mmgnn.autodiff.tape import Tape, Tensor
from mmgnn.config import ModelConfig
from mmgnn.graph.storage import Dataset, FeatureMatrix, LabelVector, SparseGraph
from mmgnn.graph.synthetic import random_graph
from mmgnn.model.network import MixMomentGNN
from mmgnn.models import FusionMode, GradcheckReport, MomentKind, ScalingPoint, ScalingReport
from mmgnn.seeding import SYNTH_STREAM, rng_for

logger = logging.getLogger(__name__)

GRADCHECK_TOLERANCE = 1e-3
GRADCHECK_COORDINATES = 200
SCALING_R2 = 0.95

# 12-node ring with chords; node 11 hangs off node 0 only
_CANNED_EDGES = [(i, (i + 1) % 11) for i in range(11)] + [(0, 5), (2, 8), (3, 7), (1, 9), (4, 10), (0, 11)]


def canned_instance(feature_dim: int = 3) -> Dataset:
    graph = SparseGraph.from_edges(12, np.array(_CANNED_EDGES))
    rng = rng_for(1234, SYNTH_STREAM)
    labels = np.array([0, 1, 2] * 4)
    features = rng.normal(size=(12, feature_dim)) + 0.5 * labels[:, None]
    return Dataset(
        graph=graph,
        features=FeatureMatrix(features),
        labels=LabelVector.from_array(labels),
        name="canned",
    )


def gradcheck_config(seed: int = 0) -> ModelConfig:
    """2 layers, K=3, central moments, attention fusion."""
    return ModelConfig(
        num_layers=2,
        hidden=4,
        k=3,
        moment=MomentKind.CENTRAL,
        fusion=FusionMode(),
        seed=seed,
    )


def run_gradcheck(
    seed: int = 0,
    coordinates: int = GRADCHECK_COORDINATES,
    tolerance: float = GRADCHECK_TOLERANCE,
    config: ModelConfig | None = None,
) -> GradcheckReport:
    """Compare tape gradients of the full-graph loss with central differences."""
    dataset = canned_instance()
    model = MixMomentGNN(config or gradcheck_config(seed), dataset.feature_dim, dataset.num_classes)
    x = Tensor(dataset.features.values)

    def loss() -> Tensor:
        return softmax_cross_entropy(model.forward(dataset.graph, x).logits, dataset.labels)

    params = model.parameters()
    total = sum(p.values.size for p in params)
    errors = gradient_errors(
        loss,
        params,
        max_coordinates=min(coordinates, total),
        rng=rng_for(seed, SYNTH_STREAM),
    )
    worst_name, worst = max(errors, key=lambda item: item[1])
    report = GradcheckReport(
        max_relative_error=worst,
        coordinates=len(errors),
        tolerance=tolerance,
        passed=worst < tolerance,
        worst_parameter=worst_name,
    )
    logger.info(
        f"gradcheck: {report.coordinates} coordinates, max relative error "
        f"{report.max_relative_error:.3e} ({worst_name}) -> {'PASS' if report.passed else 'FAIL'}"
    )
    return report


def time_step(graph: SparseGraph, model: MixMomentGNN, x: Tensor, labels: LabelVector, repeats: int = 3) -> float:
    """Best-of-`repeats` seconds for one forward + backward pass."""
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        with Tape() as tape:
            loss = softmax_cross_entropy(model.forward(graph, x).logits, labels)
        tape.backward(loss)
        best = min(best, time.perf_counter() - start)
    return best


def fit_line(x: Sequence[float], y: Sequence[float]) -> tuple[float, float, float]:
    """Least-squares y = a + b·x; returns (a, b, R²)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    slope, intercept = np.polyfit(x, y, 1)
    residual = y - (intercept + slope * x)
    spread = float(np.sum((y - y.mean()) ** 2))
    r_squared = 1.0 - float(np.sum(residual**2)) / spread if spread > 0 else 1.0
    return float(intercept), float(slope), r_squared


def scaling_benchmark(
    edge_counts: Sequence[int] = (10_000, 100_000, 1_000_000),
    num_nodes: int = 10_000,
    dim: int = 16,
    k: int = 3,
    seed: int = 0,
    repeats: int = 3,
) -> ScalingReport:
    if len(edge_counts) < 2:
        raise ValueError("scaling benchmark needs at least 2 edge counts")
    rng = rng_for(seed, SYNTH_STREAM)
    x = Tensor(rng.normal(size=(num_nodes, dim)))
    labels = LabelVector.from_array(np.arange(num_nodes) % 2)
    model = MixMomentGNN(ModelConfig(k=k, hidden=dim, seed=seed), dim, 2)

    points = []
    for edges in edge_counts:
        graph = random_graph(num_nodes, edges, seed)
        seconds = time_step(graph, model, x, labels, repeats)
        points.append(ScalingPoint(num_edges=graph.num_edges, seconds=seconds))
        logger.info(f"bench: |E|={graph.num_edges:>9d}  {seconds:.4f}s")

    intercept, slope, r_squared = fit_line([p.num_edges for p in points], [p.seconds for p in points])
    return ScalingReport(
        points=points,
        intercept=intercept,
        slope=slope,
        r_squared=r_squared,
        passed=r_squared >= SCALING_R2,
    )
