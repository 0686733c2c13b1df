"""Layer and model assembly, parameter initialization and checkpoint I/O.

Layer l maps D_l -> D_{l+1} with D_0 = input features, D_L = classes and
every other width = hidden. A layer computes

    out = fuse(MME(h), AMA(h, MME(h)))  [+ residual(h)]

with relu on hidden layers and identity on the output layer. Residuals add
h directly when widths match and through an affine projection otherwise.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from mmgnn.autodiff import ops
from mmgnn.autodiff.checkpoint import CheckpointError, load_into, read_checkpoint, save_checkpoint
from mmgnn.autodiff.tape import Parameter, ShapeError, Tensor
from mmgnn.config import ModelConfig
from mmgnn.graph.storage import SparseGraph
from mmgnn.model.adaptor import AdaptorParams, AffineParams, AttentionWeights, attention, fuse
from mmgnn.model.moments import MomentLayerParams, MomentSignatures, mme_forward
from mmgnn.models import Architecture, FusionKind
from mmgnn.seeding import INIT_STREAM, rng_for

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Parameters
# ---------------------------------------------------------------------------

@dataclass
class LayerParams:
    moment: MomentLayerParams
    adaptor: Optional[AdaptorParams] = None
    mlp: Optional[AffineParams] = None
    residual: Optional[AffineParams] = None  # None: identity residual (or none at all)

    def parameters(self) -> list[Parameter]:
        params = self.moment.parameters()
        for part in (self.adaptor, self.mlp, self.residual):
            if part is not None:
                params.extend(part.parameters())
        return params


@dataclass
class ModelParams:
    layers: list[LayerParams]

    def parameters(self) -> list[Parameter]:
        return [p for layer in self.layers for p in layer.parameters()]

    def named(self) -> dict[str, Parameter]:
        return {p.name: p for p in self.parameters()}


def glorot(rng: np.random.Generator, rows: int, cols: int, name: str) -> Parameter:
    limit = np.sqrt(6.0 / (rows + cols))
    return Parameter(rng.uniform(-limit, limit, size=(rows, cols)), name)


def _affine(rng: np.random.Generator, rows: int, cols: int, prefix: str) -> AffineParams:
    return AffineParams(
        weight=glorot(rng, rows, cols, f"{prefix}.weight"),
        bias=Parameter(np.zeros((1, cols)), f"{prefix}.bias"),
    )


def layer_widths(config: ModelConfig, in_dim: int, num_classes: int) -> list[int]:
    return [in_dim] + [config.hidden] * (config.num_layers - 1) + [num_classes]


def init_params(config: ModelConfig, in_dim: int, num_classes: int) -> ModelParams:
    """Glorot-uniform weights and zero biases, drawn from the config's init stream."""
    rng = rng_for(config.seed, INIT_STREAM)
    widths = layer_widths(config, in_dim, num_classes)
    orders = config.k if config.architecture == Architecture.MMGNN else 1
    layers = []
    for index, (d_in, d_out) in enumerate(zip(widths[:-1], widths[1:])):
        prefix = f"layer{index}"
        moment = MomentLayerParams(
            {k: glorot(rng, d_in, d_out, f"{prefix}.moment.w{k}") for k in range(1, orders + 1)}
        )
        adaptor = mlp = residual = None
        if config.architecture == Architecture.MMGNN:
            if config.fusion.kind == FusionKind.ATTENTION:
                adaptor = AdaptorParams(
                    query=glorot(rng, d_in, d_out, f"{prefix}.adaptor.query"),
                    key=glorot(rng, d_out, d_out, f"{prefix}.adaptor.key"),
                    attn=glorot(rng, 2 * d_out, d_out, f"{prefix}.adaptor.attn"),
                )
            elif config.fusion.kind == FusionKind.MLP:
                mlp = _affine(rng, orders * d_out, d_out, f"{prefix}.mlp")
        if config.residual and d_in != d_out:
            residual = _affine(rng, d_in, d_out, f"{prefix}.residual")
        layers.append(LayerParams(moment=moment, adaptor=adaptor, mlp=mlp, residual=residual))
    return ModelParams(layers)


# ---------------------------------------------------------------------------
# Forward
# ---------------------------------------------------------------------------

@dataclass
class LayerResult:
    output: Tensor
    signatures: Optional[MomentSignatures] = None
    attention: Optional[AttentionWeights] = None


@dataclass
class ForwardResult:
    logits: Tensor
    layers: list[LayerResult] = field(default_factory=list)

    @property
    def attention(self) -> list[AttentionWeights]:
        return [r.attention for r in self.layers if r.attention is not None]


def _aggregate(g: SparseGraph, h: Tensor, architecture: Architecture) -> Tensor:
    if architecture == Architecture.MAX:
        return ops.segment_max(g, h)
    if architecture == Architecture.SUM:
        return ops.spmm_sum(g, h)
    return ops.spmm_mean(g, h)


def run_layer(
    g: SparseGraph,
    h_prev: Tensor,
    params: LayerParams,
    config: ModelConfig,
    is_last: bool,
    rng: Optional[np.random.Generator] = None,
) -> LayerResult:
    h_in = ops.dropout(h_prev, config.dropout, rng)
    sigs = att = None
    if config.architecture == Architecture.MMGNN:
        sigs = mme_forward(g, h_in, params.moment, config.moment, config.root_eps)
        if params.adaptor is not None:
            att = attention(h_in, sigs, params.adaptor, config.attention_activation)
        out = fuse(sigs, att, config.fusion, params.mlp)
    else:
        out = ops.matmul(_aggregate(g, h_in, config.architecture), params.moment.weights[1])

    if config.residual:
        skip = h_prev if params.residual is None else params.residual.apply(h_prev)
        if skip.shape != out.shape:
            raise ShapeError(f"residual {skip.shape} does not match layer output {out.shape}")
        out = ops.add(out, skip)
    if not is_last:
        out = ops.relu(out)
    return LayerResult(output=out, signatures=sigs, attention=att)


def layer_forward(
    g: SparseGraph,
    h_prev: Tensor,
    params: LayerParams,
    config: ModelConfig,
    is_last: bool = False,
) -> Tensor:
    return run_layer(g, h_prev, params, config, is_last).output


def run_model(
    g: SparseGraph,
    x: Tensor,
    params: ModelParams,
    config: ModelConfig,
    rng: Optional[np.random.Generator] = None,
) -> ForwardResult:
    if x.rows != g.num_nodes:
        raise ShapeError(f"{x.rows} feature rows for {g.num_nodes} nodes")
    expected = params.layers[0].moment.in_dim
    if x.cols != expected:
        raise ShapeError(f"model expects {expected} input features, dataset has {x.cols}")
    h = x
    results = []
    for index, layer in enumerate(params.layers):
        result = run_layer(g, h, layer, config, is_last=index == len(params.layers) - 1, rng=rng)
        results.append(result)
        h = result.output
    return ForwardResult(logits=h, layers=results)


def model_forward(g: SparseGraph, x: Tensor, params: ModelParams, config: ModelConfig) -> Tensor:
    return run_model(g, x, params, config).logits


# ---------------------------------------------------------------------------
# Model object
# ---------------------------------------------------------------------------

class MixMomentGNN:
    """Config + parameters bundle with forward and checkpoint helpers."""

    def __init__(
        self,
        config: ModelConfig,
        in_dim: int,
        num_classes: int,
        params: Optional[ModelParams] = None,
    ) -> None:
        self.config = config
        self.in_dim = in_dim
        self.num_classes = num_classes
        self.params = params or init_params(config, in_dim, num_classes)

    def forward(
        self,
        g: SparseGraph,
        x: Tensor,
        rng: Optional[np.random.Generator] = None,
    ) -> ForwardResult:
        return run_model(g, x, self.params, self.config, rng)

    def parameters(self) -> list[Parameter]:
        return self.params.parameters()

    def snapshot(self) -> dict[str, np.ndarray]:
        return {p.name: p.values.copy() for p in self.parameters()}

    def restore(self, values: dict[str, np.ndarray]) -> None:
        load_into(self.parameters(), values)

    def save(self, path: str | Path) -> Path:
        header = {
            "model": self.config.model_dump(mode="json"),
            "in_dim": self.in_dim,
            "num_classes": self.num_classes,
        }
        return save_checkpoint(path, self.parameters(), header)

    @classmethod
    def load(cls, path: str | Path) -> MixMomentGNN:
        header, arrays = read_checkpoint(path)
        if header is None:
            raise CheckpointError(f"{path}: checkpoint has no config header")
        model = cls(ModelConfig.model_validate(header["model"]), header["in_dim"], header["num_classes"])
        model.restore(arrays)
        logger.info(f"Loaded checkpoint {path} ({len(arrays)} parameters)")
        return model
