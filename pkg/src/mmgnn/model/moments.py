"""Multi-order moment embedding.

For each order k the layer computes the neighborhood moment of its input,
brings it back to the input's scale with a signed 1/k root, and projects it
with its own matrix W_k:

    origin:   root_k( mean_{j in N(i)} h_j^k ) · W_k
    central:  root_k( mean_{j in N(i)} (h_j - mu_i)^k ) · W_k,  mu_i = mean_{j in N(i)} h_j

Under the central kind order 1 uses mu_i itself, since the first central
moment vanishes identically.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from mmgnn.autodiff import ops
from mmgnn.autodiff.tape import Parameter, ShapeError, Tensor
from mmgnn.graph.storage import SparseGraph
from mmgnn.models import MomentKind

logger = logging.getLogger(__name__)


def effective_kind(order: int, kind: MomentKind) -> MomentKind:
    return MomentKind.ORIGIN if order == 1 else kind


def raw_moment(
    g: SparseGraph,
    h: Tensor,
    k: int,
    kind: MomentKind,
    eps: float = 1e-6,
) -> Tensor:
    """Per-node k-th neighborhood moment of `h`, root-normalized; zero-degree rows are 0."""
    if k < 1:
        raise ValueError(f"moment order must be >= 1, got {k}")
    if kind == MomentKind.ORIGIN:
        return ops.signed_root(ops.spmm_mean(g, ops.pow_elem(h, k)), k, eps)
    if k == 1:
        raise ValueError("the first central moment is identically zero; use k >= 2")
    mu = ops.spmm_mean(g, h)
    deviations = ops.sub(ops.gather_neighbors(g, h), ops.gather_centers(g, mu))
    return ops.signed_root(ops.edge_mean(g, ops.pow_elem(deviations, k)), k, eps)


@dataclass
class MomentLayerParams:
    weights: dict[int, Parameter]  # order -> W_k [D_in × D_hidden]

    def __post_init__(self) -> None:
        if not self.weights:
            raise ValueError("a moment layer needs at least one order")
        orders = sorted(self.weights)
        if orders != list(range(1, len(orders) + 1)):
            raise ValueError(f"moment orders must be 1..K, got {orders}")
        shapes = {w.shape for w in self.weights.values()}
        if len(shapes) != 1:
            raise ShapeError(f"moment matrices disagree in shape: {sorted(shapes)}")

    @property
    def max_order(self) -> int:
        return len(self.weights)

    @property
    def in_dim(self) -> int:
        return self.weights[1].rows

    @property
    def out_dim(self) -> int:
        return self.weights[1].cols

    def parameters(self) -> list[Parameter]:
        return [self.weights[k] for k in sorted(self.weights)]


@dataclass
class MomentSignatures:
    signatures: dict[int, Tensor]                    # order -> [n × D_hidden]
    raw: dict[int, Tensor] = field(default_factory=dict)  # order -> [n × D_in], pre-projection

    @property
    def orders(self) -> list[int]:
        return sorted(self.signatures)

    def __getitem__(self, order: int) -> Tensor:
        return self.signatures[order]


def mme_forward(
    g: SparseGraph,
    h: Tensor,
    params: MomentLayerParams,
    kind: MomentKind,
    eps: float = 1e-6,
) -> MomentSignatures:
    if h.cols != params.in_dim:
        raise ShapeError(f"moment layer expects {params.in_dim} input columns, got {h.cols}")
    signatures: dict[int, Tensor] = {}
    raw: dict[int, Tensor] = {}
    for k in range(1, params.max_order + 1):
        raw[k] = raw_moment(g, h, k, effective_kind(k, kind), eps)
        signatures[k] = ops.matmul(raw[k], params.weights[k])
    return MomentSignatures(signatures=signatures, raw=raw)
