"""From-scratch fully-convolutional network engine."""

from .model import (
    CONV,
    DECONV,
    L03_DECONV_INC,
    L03_DECONV_INC_MULTICH,
    L04_CONV_DEC,
    L05_DECONV,
    RELU,
    TOPOLOGY_NAMES,
    LayerSpec,
    NetworkSpec,
    ProbabilityMap,
    backward_layers,
    build_topology,
    forward,
    forward_layers,
    load_model,
    save_model,
    spatial_output_shape,
)
from .ops import (
    conv2d_backward,
    conv2d_forward,
    deconv2d_backward,
    deconv2d_forward,
    relu,
    relu_backward,
    softmax_xent,
)
from .train import TrainConfig, train

__all__ = [
    "CONV", "DECONV", "RELU",
    "L05_DECONV", "L04_CONV_DEC", "L03_DECONV_INC", "L03_DECONV_INC_MULTICH",
    "TOPOLOGY_NAMES", "LayerSpec", "NetworkSpec", "ProbabilityMap",
    "build_topology", "forward", "forward_layers", "backward_layers",
    "load_model", "save_model", "spatial_output_shape",
    "conv2d_forward", "conv2d_backward", "deconv2d_forward", "deconv2d_backward",
    "relu", "relu_backward", "softmax_xent",
    "TrainConfig", "train",
]
