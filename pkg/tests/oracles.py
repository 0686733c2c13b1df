"""Loop-based reference implementations over explicit neighbor lists."""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from mmgnn.graph.storage import SparseGraph


def random_edges(rng: np.random.Generator, n: int, p: float = 0.4) -> list[tuple[int, int]]:
    return [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p]


def neighbor_lists(n: int, edges: list[tuple[int, int]]) -> list[list[int]]:
    nbrs: list[set[int]] = [set() for _ in range(n)]
    for u, v in edges:
        if u != v:
            nbrs[u].add(v)
            nbrs[v].add(u)
    return [sorted(s) for s in nbrs]


def random_instance(rng: np.random.Generator, max_nodes: int = 10, max_dim: int = 4):
    n = int(rng.integers(3, max_nodes + 1))
    d = int(rng.integers(1, max_dim + 1))
    edges = random_edges(rng, n)
    graph = SparseGraph.from_edges(n, np.array(edges, dtype=np.int64).reshape(-1, 2))
    return graph, neighbor_lists(n, edges), rng.uniform(-2.0, 2.0, size=(n, d))


def signed_root(x: float, k: int, eps: float) -> float:
    if k == 1:
        return x
    base = x * x + eps
    if base == 0.0:
        return 0.0
    return x * base ** ((1.0 / k - 1.0) / 2.0)


def raw_moment(nbrs: list[list[int]], h: np.ndarray, k: int, central: bool, eps: float) -> np.ndarray:
    n, d = h.shape
    out = np.zeros((n, d))
    for i in range(n):
        if not nbrs[i]:
            continue
        for c in range(d):
            values = [h[j, c] for j in nbrs[i]]
            if central and k > 1:
                mu = sum(values) / len(values)
                values = [v - mu for v in values]
            moment = sum(v**k for v in values) / len(values)
            out[i, c] = signed_root(moment, k, eps)
    return out


def sigmoid(x: float) -> float:
    return 1.0 / (1.0 + math.exp(-x))


def attention(
    h_prev: np.ndarray, sig: np.ndarray, wq: np.ndarray, wk: np.ndarray, wa: np.ndarray
) -> np.ndarray:
    n = h_prev.shape[0]
    out = np.zeros((n, wa.shape[1]))
    for i in range(n):
        joined = np.concatenate([h_prev[i] @ wq, sig[i] @ wk])
        for c in range(wa.shape[1]):
            out[i, c] = sigmoid(sum(joined[r] * wa[r, c] for r in range(joined.size)))
    return out


def model_forward(
    nbrs: list[list[int]],
    x: np.ndarray,
    params: dict[str, np.ndarray],
    num_layers: int,
    k: int,
    central: bool,
    eps: float,
    residual: bool,
    fusion: str = "attention",
    single_order: Optional[int] = None,
) -> np.ndarray:
    """Straight-line forward pass of the mix-moment network (sigmoid attention)."""
    h = x
    for layer in range(num_layers):
        prefix = f"layer{layer}"
        sigs = {
            order: raw_moment(nbrs, h, order, central, eps) @ params[f"{prefix}.moment.w{order}"]
            for order in range(1, k + 1)
        }
        if fusion == "attention":
            out = sum(
                attention(
                    h, sigs[o],
                    params[f"{prefix}.adaptor.query"],
                    params[f"{prefix}.adaptor.key"],
                    params[f"{prefix}.adaptor.attn"],
                ) * sigs[o]
                for o in range(1, k + 1)
            )
        elif fusion == "mean":
            out = sum(sigs.values()) / k
        elif fusion == "single":
            out = sigs[single_order]
        else:
            stacked = np.concatenate([sigs[o] for o in range(1, k + 1)], axis=1)
            out = stacked @ params[f"{prefix}.mlp.weight"] + params[f"{prefix}.mlp.bias"]
        if residual:
            if f"{prefix}.residual.weight" in params:
                out = out + h @ params[f"{prefix}.residual.weight"] + params[f"{prefix}.residual.bias"]
            else:
                out = out + h
        if layer < num_layers - 1:
            out = np.maximum(out, 0.0)
        h = out
    return h


def mme_forward(
    nbrs: list[list[int]], h: np.ndarray, weights: dict[int, np.ndarray], central: bool, eps: float
) -> dict[int, np.ndarray]:
    return {k: raw_moment(nbrs, h, k, central, eps) @ w for k, w in weights.items()}


def fuse_attention(att: dict[int, np.ndarray], sigs: dict[int, np.ndarray]) -> np.ndarray:
    n, d = sigs[1].shape
    out = np.zeros((n, d))
    for i in range(n):
        for c in range(d):
            out[i, c] = sum(att[k][i, c] * sigs[k][i, c] for k in sorted(sigs))
    return out
