"""From-scratch convolutional classifier: layers, training, gradcheck,
serialization, and the compiled/numpy kernel backends."""

from .gradcheck import grad_check
from .kernels import BACKEND
from .network import (
    NetworkSpec,
    Network,
    LayerSpec,
    alexnet_bn_spec,
    cross_entropy,
    euclidean_loss,
    softmax,
    tinynet_spec,
)
from .serialize import load_model, save_model
from .train import Adam, ModelArtifact, TrainConfig, inverse_frequency_weights, train

__all__ = [
    "Adam",
    "BACKEND",
    "LayerSpec",
    "ModelArtifact",
    "Network",
    "NetworkSpec",
    "TrainConfig",
    "alexnet_bn_spec",
    "cross_entropy",
    "euclidean_loss",
    "grad_check",
    "inverse_frequency_weights",
    "load_model",
    "save_model",
    "softmax",
    "tinynet_spec",
    "train",
]
