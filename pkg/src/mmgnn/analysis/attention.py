"""Layer × order averages of moment-attention weights."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from mmgnn.analysis.statistics import AnalysisError
from mmgnn.model.adaptor import AttentionWeights


def attention_summary(layers: Sequence[AttentionWeights]) -> np.ndarray:
    """Mean attention over nodes and hidden dimensions: [layers × K], column k-1 for order k."""
    if not layers:
        raise AnalysisError("no attention weights to summarize (model does not use attention fusion)")
    orders = sorted(layers[0])
    summary = np.zeros((len(layers), len(orders)), dtype=np.float64)
    for i, weights in enumerate(layers):
        if sorted(weights) != orders:
            raise AnalysisError(f"layer {i} has orders {sorted(weights)}, expected {orders}")
        for j, k in enumerate(orders):
            summary[i, j] = float(np.mean(weights[k].values))
    return summary
