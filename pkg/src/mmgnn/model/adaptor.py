"""Element-wise attention over moment orders and signature fusion."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from mmgnn.autodiff import ops
from mmgnn.autodiff.tape import Parameter, ShapeError, Tensor
from mmgnn.model.moments import MomentSignatures
from mmgnn.models import AttentionActivation, FusionKind, FusionMode


@dataclass
class AdaptorParams:
    query: Parameter  # [D_prev × D_hidden]
    key: Parameter    # [D_hidden × D_hidden]
    attn: Parameter   # [2·D_hidden × D_hidden]

    def __post_init__(self) -> None:
        hidden = self.key.cols
        if self.query.cols != hidden or self.key.rows != hidden:
            raise ShapeError(f"query {self.query.shape} / key {self.key.shape} disagree on D_hidden")
        if self.attn.shape != (2 * hidden, hidden):
            raise ShapeError(f"attention matrix must be {(2 * hidden, hidden)}, got {self.attn.shape}")

    def parameters(self) -> list[Parameter]:
        return [self.query, self.key, self.attn]


@dataclass
class AffineParams:
    weight: Parameter
    bias: Parameter  # [1 × out]

    def apply(self, x: Tensor) -> Tensor:
        return ops.add(ops.matmul(x, self.weight), self.bias)

    def parameters(self) -> list[Parameter]:
        return [self.weight, self.bias]


# order -> [n × D_hidden] gate values
AttentionWeights = dict[int, Tensor]


def attention(
    h_prev: Tensor,
    sigs: MomentSignatures,
    p: AdaptorParams,
    activation: AttentionActivation = AttentionActivation.SIGMOID,
) -> AttentionWeights:
    """a_k = act([h_prev·W_query || sig_k·W_key]·W_a), one gate per node, dimension and order."""
    if h_prev.cols != p.query.rows:
        raise ShapeError(f"query expects {p.query.rows} columns, got {h_prev.cols}")
    query = ops.matmul(h_prev, p.query)
    scores = {
        k: ops.matmul(ops.concat_cols([query, ops.matmul(sigs[k], p.key)]), p.attn)
        for k in sigs.orders
    }
    if activation == AttentionActivation.SIGMOID:
        return {k: ops.sigmoid(s) for k, s in scores.items()}

    orders = sigs.orders
    width = p.key.cols
    stacked = ops.grouped_softmax(ops.concat_cols([scores[k] for k in orders]), len(orders))
    return {k: ops.slice_cols(stacked, i * width, (i + 1) * width) for i, k in enumerate(orders)}


def fuse(
    sigs: MomentSignatures,
    att: Optional[AttentionWeights],
    mode: FusionMode,
    mlp: Optional[AffineParams] = None,
) -> Tensor:
    orders = sigs.orders
    if mode.kind == FusionKind.ATTENTION:
        if att is None or sorted(att) != orders:
            raise ValueError("attention fusion needs one attention tensor per moment order")
        total = ops.mul_elem(att[orders[0]], sigs[orders[0]])
        for k in orders[1:]:
            total = ops.add(total, ops.mul_elem(att[k], sigs[k]))
        return total
    if mode.kind == FusionKind.SINGLE_MOMENT:
        if mode.order not in sigs.signatures:
            raise ValueError(f"fusion {mode} needs order {mode.order}, signatures hold {orders}")
        return sigs[mode.order]
    if mode.kind == FusionKind.MEAN_ENSEMBLE:
        total = sigs[orders[0]]
        for k in orders[1:]:
            total = ops.add(total, sigs[k])
        return ops.scale(total, 1.0 / len(orders))
    if mlp is None:
        raise ValueError("mlp fusion needs its affine parameters")
    return mlp.apply(ops.concat_cols([sigs[k] for k in orders]))
