"""Differentiable operations on 2-D tensors.

Each op computes its forward value with numpy / scipy.sparse and hands a
closure mapping the output gradient to per-input gradients to `record`.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.special import expit, logsumexp, softmax

from mmgnn.autodiff.tape import ShapeError, Tensor, record
from mmgnn.graph.storage import LabelVector, SparseGraph, SplitMask
from mmgnn.models import SplitRole


def _check_rows(g: SparseGraph, h: Tensor, op: str) -> None:
    if h.rows != g.num_nodes:
        raise ShapeError(f"{op}: tensor has {h.rows} rows, graph has {g.num_nodes} nodes")


def _same_shape(a: Tensor, b: Tensor, op: str) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


def _row_broadcast(a: Tensor, b: Tensor, op: str) -> bool:
    """True when b is a 1×cols row vector broadcast over a's rows."""
    if a.shape == b.shape:
        return False
    if b.rows == 1 and b.cols == a.cols:
        return True
    raise ShapeError(f"{op}: cannot broadcast {b.shape} onto {a.shape}")


# ---------------------------------------------------------------------------
# Linear algebra
# ---------------------------------------------------------------------------

def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.cols != b.rows:
        raise ShapeError(f"matmul: inner dimensions differ, {a.shape} @ {b.shape}")
    av, bv = a.values, b.values

    def backward(g: np.ndarray):
        return g @ bv.T, av.T @ g

    return record(av @ bv, (a, b), backward, "matmul")


def spmm(operator: sp.spmatrix, h: Tensor, op: str = "spmm") -> Tensor:
    """Sparse (constant) operator times dense tensor."""
    if operator.shape[1] != h.rows:
        raise ShapeError(f"{op}: operator {operator.shape} cannot multiply {h.shape}")

    def backward(g: np.ndarray):
        return (np.asarray(operator.T @ g),)

    return record(np.asarray(operator @ h.values), (h,), backward, op)


def spmm_mean(g: SparseGraph, h: Tensor) -> Tensor:
    """Row i = mean of h over N(v_i); zero-degree rows are 0."""
    _check_rows(g, h, "spmm_mean")
    return spmm(g.mean_operator, h, "spmm_mean")


def spmm_sum(g: SparseGraph, h: Tensor) -> Tensor:
    _check_rows(g, h, "spmm_sum")
    return spmm(g.adjacency, h, "spmm_sum")


def gather_neighbors(g: SparseGraph, h: Tensor) -> Tensor:
    """E×d: the neighbor endpoint's row for every stored edge."""
    _check_rows(g, h, "gather_neighbors")
    return spmm(g.neighbor_gather, h, "gather_neighbors")


def gather_centers(g: SparseGraph, h: Tensor) -> Tensor:
    """E×d: the center node's row for every stored edge."""
    _check_rows(g, h, "gather_centers")
    return spmm(g.center_gather, h, "gather_centers")


def edge_mean(g: SparseGraph, e: Tensor) -> Tensor:
    """n×d: average of per-edge rows into their center node."""
    if e.rows != g.num_edges:
        raise ShapeError(f"edge_mean: tensor has {e.rows} rows, graph has {g.num_edges} edges")
    return spmm(g.edge_mean, e, "edge_mean")


def segment_max(g: SparseGraph, h: Tensor) -> Tensor:
    """Neighborhood max; ties share the gradient equally; zero-degree rows are 0."""
    _check_rows(g, h, "segment_max")
    out = np.zeros_like(h.values)
    if g.num_edges == 0:
        return record(out, (h,), lambda grad: (np.zeros_like(h.values),), "segment_max")
    gathered = h.values[g.col_indices]
    nonempty = np.flatnonzero(g.degrees > 0)
    starts = g.row_offsets[:-1][nonempty]
    out[nonempty] = np.maximum.reduceat(gathered, starts, axis=0)
    winners = (gathered == out[g.edge_rows]).astype(np.float64)
    ties = np.ones_like(out)
    ties[nonempty] = np.add.reduceat(winners, starts, axis=0)
    share = winners / ties[g.edge_rows]

    def backward(grad: np.ndarray):
        return (np.asarray(g.neighbor_gather.T @ (share * grad[g.edge_rows])),)

    return record(out, (h,), backward, "segment_max")


# ---------------------------------------------------------------------------
# Element-wise
# ---------------------------------------------------------------------------

def add(a: Tensor, b: Tensor) -> Tensor:
    """a + b; b may be a 1×cols row vector (bias)."""
    broadcast = _row_broadcast(a, b, "add")

    def backward(g: np.ndarray):
        return g, (g.sum(axis=0, keepdims=True) if broadcast else g)

    return record(a.values + b.values, (a, b), backward, "add")


def sub(a: Tensor, b: Tensor) -> Tensor:
    broadcast = _row_broadcast(a, b, "sub")

    def backward(g: np.ndarray):
        return g, (-g.sum(axis=0, keepdims=True) if broadcast else -g)

    return record(a.values - b.values, (a, b), backward, "sub")


def mul_elem(a: Tensor, b: Tensor) -> Tensor:
    _same_shape(a, b, "mul_elem")
    av, bv = a.values, b.values

    def backward(g: np.ndarray):
        return g * bv, g * av

    return record(av * bv, (a, b), backward, "mul_elem")


def scale(t: Tensor, factor: float) -> Tensor:
    factor = float(factor)

    def backward(g: np.ndarray):
        return (g * factor,)

    return record(t.values * factor, (t,), backward, "scale")


def pow_elem(t: Tensor, k: int) -> Tensor:
    if k < 1:
        raise ValueError(f"pow_elem: order must be a positive integer, got {k}")
    x = t.values
    if k == 1:
        return record(x.copy(), (t,), lambda g: (g,), "pow_elem")

    def backward(g: np.ndarray):
        return (g * k * np.power(x, k - 1),)

    return record(np.power(x, k), (t,), backward, "pow_elem")


def signed_root(t: Tensor, k: int, eps: float = 1e-6) -> Tensor:
    """Odd, monotone k-th root: x·(x² + eps)^((1/k − 1)/2).

    Equals sign(x)|x|^(1/k) at eps = 0 and the identity at k = 1; eps keeps
    the slope at 0 finite (eps^((1/k − 1)/2)).
    """
    if k < 1:
        raise ValueError(f"signed_root: order must be a positive integer, got {k}")
    if eps < 0:
        raise ValueError(f"signed_root: eps must be >= 0, got {eps}")
    x = t.values
    if k == 1:
        return record(x.copy(), (t,), lambda g: (g,), "signed_root")

    a = (1.0 / k - 1.0) / 2.0
    base = x * x + eps
    zero = base == 0.0
    safe = np.where(zero, 1.0, base)
    out = np.where(zero, 0.0, x * np.power(safe, a))
    slope = np.where(zero, 0.0, np.power(safe, a - 1.0) * (x * x / k + eps))

    def backward(g: np.ndarray):
        return (g * slope,)

    return record(out, (t,), backward, "signed_root")


def sigmoid(t: Tensor) -> Tensor:
    s = expit(t.values)

    def backward(g: np.ndarray):
        return (g * s * (1.0 - s),)

    return record(s, (t,), backward, "sigmoid")


def relu(t: Tensor) -> Tensor:
    active = t.values > 0

    def backward(g: np.ndarray):
        return (g * active,)

    return record(np.where(active, t.values, 0.0), (t,), backward, "relu")


def dropout(t: Tensor, rate: float, rng: Optional[np.random.Generator]) -> Tensor:
    """Inverted dropout; identity when rate is 0 or no generator is given."""
    if rate <= 0.0 or rng is None:
        return t
    if rate >= 1.0:
        raise ValueError(f"dropout rate must be < 1, got {rate}")
    keep = (rng.random(t.shape) >= rate) / (1.0 - rate)

    def backward(g: np.ndarray):
        return (g * keep,)

    return record(t.values * keep, (t,), backward, "dropout")


# ---------------------------------------------------------------------------
# Shape ops
# ---------------------------------------------------------------------------

def concat_cols(parts: Sequence[Tensor]) -> Tensor:
    if not parts:
        raise ShapeError("concat_cols: nothing to concatenate")
    rows = {p.rows for p in parts}
    if len(rows) != 1:
        raise ShapeError(f"concat_cols: row counts differ {sorted(rows)}")
    bounds = np.cumsum([0] + [p.cols for p in parts])

    def backward(g: np.ndarray):
        return tuple(g[:, bounds[i]:bounds[i + 1]] for i in range(len(parts)))

    return record(np.concatenate([p.values for p in parts], axis=1), tuple(parts), backward, "concat_cols")


def slice_cols(t: Tensor, start: int, stop: int) -> Tensor:
    if not 0 <= start < stop <= t.cols:
        raise ShapeError(f"slice_cols: [{start}, {stop}) outside {t.cols} columns")

    def backward(g: np.ndarray):
        full = np.zeros_like(t.values)
        full[:, start:stop] = g
        return (full,)

    return record(t.values[:, start:stop].copy(), (t,), backward, "slice_cols")


def grouped_softmax(t: Tensor, groups: int) -> Tensor:
    """Softmax across `groups` equal column blocks, element by element."""
    if groups < 1 or t.cols % groups:
        raise ShapeError(f"grouped_softmax: {t.cols} columns do not split into {groups} groups")
    n, width = t.rows, t.cols // groups
    s = softmax(t.values.reshape(n, groups, width), axis=1)

    def backward(g: np.ndarray):
        g3 = g.reshape(n, groups, width)
        return ((s * (g3 - (g3 * s).sum(axis=1, keepdims=True))).reshape(n, groups * width),)

    return record(s.reshape(n, groups * width), (t,), backward, "grouped_softmax")


def sum_all(t: Tensor) -> Tensor:
    def backward(g: np.ndarray):
        return (np.full_like(t.values, g[0, 0]),)

    return record(np.array([[t.values.sum()]]), (t,), backward, "sum_all")


# ---------------------------------------------------------------------------
# Loss
# ---------------------------------------------------------------------------

def softmax_cross_entropy(
    logits: Tensor,
    labels: LabelVector,
    mask: Optional[SplitMask] = None,
    role: SplitRole = SplitRole.TRAIN,
) -> Tensor:
    """Mean negative log-likelihood over the nodes holding `role` (all nodes if no mask)."""
    if logits.cols != labels.num_classes:
        raise ShapeError(f"softmax_cross_entropy: {logits.cols} logits for {labels.num_classes} classes")
    if logits.rows != len(labels):
        raise ShapeError(f"softmax_cross_entropy: {logits.rows} rows for {len(labels)} labels")
    nodes = np.arange(logits.rows) if mask is None else mask.indices(role)
    if nodes.size == 0:
        raise ValueError(f"softmax_cross_entropy: no nodes with role '{role.value}'")

    z = logits.values[nodes]
    y = labels.labels[nodes]
    lse = logsumexp(z, axis=1)
    loss = float(np.mean(lse - z[np.arange(nodes.size), y]))

    def backward(g: np.ndarray):
        probs = np.exp(z - lse[:, None])
        probs[np.arange(nodes.size), y] -= 1.0
        full = np.zeros_like(logits.values)
        full[nodes] = probs * (g[0, 0] / nodes.size)
        return (full,)

    return record(np.array([[loss]]), (logits,), backward, "softmax_cross_entropy")
