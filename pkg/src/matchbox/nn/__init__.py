from .tensor import NoGraph, ShapeMismatch, Tensor
from .layers import (
    BatchNorm1d,
    DegenerateBatch,
    DepthwiseConv1d,
    PointwiseConv1d,
    batch_norm1d,
    depthwise_conv1d,
    dropout,
    global_avg_pool,
    pointwise_conv1d,
    relu,
    residual_add,
)

__all__ = [
    "Tensor", "NoGraph", "ShapeMismatch", "DegenerateBatch",
    "DepthwiseConv1d", "PointwiseConv1d", "BatchNorm1d",
    "depthwise_conv1d", "pointwise_conv1d", "batch_norm1d",
    "relu", "dropout", "residual_add", "global_avg_pool",
]
