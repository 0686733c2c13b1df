from mmgnn.model.adaptor import AdaptorParams, AffineParams, AttentionWeights, attention, fuse
from mmgnn.model.moments import MomentLayerParams, MomentSignatures, mme_forward, raw_moment
from mmgnn.model.network import (
    ForwardResult,
    LayerParams,
    MixMomentGNN,
    ModelParams,
    init_params,
    layer_forward,
    model_forward,
    run_model,
)

__all__ = [
    "AdaptorParams",
    "AffineParams",
    "AttentionWeights",
    "ForwardResult",
    "LayerParams",
    "MixMomentGNN",
    "ModelParams",
    "MomentLayerParams",
    "MomentSignatures",
    "attention",
    "fuse",
    "init_params",
    "layer_forward",
    "mme_forward",
    "model_forward",
    "raw_moment",
    "run_model",
]
