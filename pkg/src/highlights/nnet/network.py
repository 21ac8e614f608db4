"""Network specs, construction, forward/backward and loss heads.

A :class:`NetworkSpec` is a declarative layer list; :class:`Network`
instantiates it with seeded initialization and checks that layer shapes
chain. Heads: "softmax-classifier" (cross-entropy, optionally
class-weighted) or "scalar-regressor" (Euclidean loss, decision handled
downstream).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ShapeMismatch
from . import layers as L


@dataclass(frozen=True)
class LayerSpec:
    kind: str  # conv | batchnorm | relu | maxpool | fc | flatten
    args: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "args": dict(self.args)}

    @staticmethod
    def from_dict(raw: dict) -> "LayerSpec":
        return LayerSpec(kind=raw["kind"], args=dict(raw["args"]))


def conv(out_channels, kernel=3, stride=1, pad=1):
    return LayerSpec("conv", {"out_channels": out_channels, "kernel": kernel, "stride": stride, "pad": pad})


def batchnorm(epsilon=1e-5, momentum=0.1):
    return LayerSpec("batchnorm", {"epsilon": epsilon, "momentum": momentum})


def relu():
    return LayerSpec("relu", {})


def maxpool(kernel=2, stride=2):
    return LayerSpec("maxpool", {"kernel": kernel, "stride": stride})


def fc(out_features):
    return LayerSpec("fc", {"out_features": out_features})


def flatten():
    return LayerSpec("flatten", {})


@dataclass(frozen=True)
class NetworkSpec:
    name: str
    input_shape: tuple[int, int, int]  # (channels, height, width)
    layers: tuple[LayerSpec, ...]
    num_classes: int
    head: str = "softmax-classifier"  # or "scalar-regressor"

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "input_shape": list(self.input_shape),
            "layers": [l.to_dict() for l in self.layers],
            "num_classes": self.num_classes,
            "head": self.head,
        }

    @staticmethod
    def from_dict(raw: dict) -> "NetworkSpec":
        return NetworkSpec(
            name=raw["name"],
            input_shape=tuple(raw["input_shape"]),
            layers=tuple(LayerSpec.from_dict(l) for l in raw["layers"]),
            num_classes=raw["num_classes"],
            head=raw["head"],
        )


def tinynet_spec(num_classes: int, input_size: int = 64, head: str = "softmax-classifier") -> NetworkSpec:
    """Desk-scale reference CNN: two conv/bn/relu/pool blocks + linear output."""
    out = num_classes if head == "softmax-classifier" else 1
    return NetworkSpec(
        name=f"tinynet-{head}-{num_classes}",
        input_shape=(3, input_size, input_size),
        layers=(
            conv(8), batchnorm(), relu(), maxpool(),
            conv(16), batchnorm(), relu(), maxpool(),
            flatten(), fc(out),
        ),
        num_classes=num_classes,
        head=head,
    )


def alexnet_bn_spec(num_classes: int) -> NetworkSpec:
    """Full-scale architecture kept for completeness; training it is not
    a supported desk-scale workflow."""
    out = num_classes
    return NetworkSpec(
        name=f"alexnet-bn-{num_classes}",
        input_shape=(3, 227, 227),
        layers=(
            conv(96, kernel=11, stride=4, pad=0), batchnorm(), relu(), maxpool(3, 2),
            conv(256, kernel=5, stride=1, pad=2), batchnorm(), relu(), maxpool(3, 2),
            conv(384, kernel=3, stride=1, pad=1), batchnorm(), relu(),
            conv(384, kernel=3, stride=1, pad=1), batchnorm(), relu(),
            conv(256, kernel=3, stride=1, pad=1), batchnorm(), relu(), maxpool(3, 2),
            flatten(), fc(4096), batchnorm(), relu(),
            fc(4096), batchnorm(), relu(), fc(out),
        ),
        num_classes=num_classes,
        head="softmax-classifier",
    )


class Network:
    """An instantiated, trainable network."""

    def __init__(self, spec: NetworkSpec, rng: np.random.Generator):
        self.spec = spec
        self.layers: list[L.Layer] = []
        shape = spec.input_shape
        counts: dict[str, int] = {}
        for ls in spec.layers:
            counts[ls.kind] = counts.get(ls.kind, 0) + 1
            name = f"{ls.kind}{counts[ls.kind]}"
            if ls.kind == "conv":
                layer = L.Conv2d(
                    name, shape[0], ls.args["out_channels"], ls.args["kernel"],
                    ls.args["stride"], ls.args["pad"], rng,
                )
            elif ls.kind == "batchnorm":
                channels = shape[0] if len(shape) == 3 else shape[-1]
                layer = L.BatchNorm(name, channels, ls.args.get("epsilon", 1e-5), ls.args.get("momentum", 0.1))
            elif ls.kind == "relu":
                layer = L.ReLU(name)
            elif ls.kind == "maxpool":
                layer = L.MaxPool(name, ls.args["kernel"], ls.args["stride"])
            elif ls.kind == "fc":
                if len(shape) != 1:
                    raise ShapeMismatch(name, "fully-connected layer needs flattened input")
                layer = L.FullyConnected(name, shape[0], ls.args["out_features"], rng)
            elif ls.kind == "flatten":
                layer = L.Flatten(name)
            else:
                raise ShapeMismatch(name, f"unknown layer kind {ls.kind!r}")
            shape = layer.output_shape(shape)
            self.layers.append(layer)
        expected = spec.num_classes if spec.head == "softmax-classifier" else 1
        if shape != (expected,):
            raise ShapeMismatch(
                self.layers[-1].name if self.layers else "input",
                f"final feature shape {shape}, expected ({expected},)",
            )
        self.output_shape = shape

    def forward(self, batch: np.ndarray, train: bool = False) -> np.ndarray:
        """Logits (N, C) for classifiers, (N, 1) for regressors."""
        if batch.ndim != 4 or tuple(batch.shape[1:]) != tuple(self.spec.input_shape):
            first = self.layers[0].name if self.layers else "input"
            raise ShapeMismatch(
                first, f"batch shape {batch.shape[1:]}, expected {self.spec.input_shape}"
            )
        x = np.asarray(batch, dtype=np.float64)
        for layer in self.layers:
            x = layer.forward(x, train)
        return x

    def backward(self, dlogits: np.ndarray) -> np.ndarray:
        dx = dlogits
        for layer in reversed(self.layers):
            dx = layer.backward(dx)
        return dx

    def parameters(self):
        """Ordered (layer_name, param_name, array) triples."""
        for layer in self.layers:
            for key in sorted(layer.params):
                yield layer.name, key, layer.params[key]

    def buffers(self):
        for layer in self.layers:
            for key in sorted(layer.buffers):
                yield layer.name, key, layer.buffers[key]

    def grads(self):
        for layer in self.layers:
            for key in sorted(layer.params):
                yield layer.name, key, layer.grads[key]


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax with a max shift for stability."""
    logits = np.asarray(logits, dtype=np.float64)
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(logits: np.ndarray, labels: np.ndarray, class_weights=None):
    """Weighted mean cross-entropy; returns (loss, dlogits)."""
    n = logits.shape[0]
    probs = softmax(logits)
    if class_weights is None:
        w = np.ones(n)
    else:
        w = np.asarray(class_weights, dtype=np.float64)[labels]
    nll = -np.log(np.clip(probs[np.arange(n), labels], 1e-300, None))
    wsum = w.sum()
    loss = float((w * nll).sum() / wsum)
    dlogits = probs.copy()
    dlogits[np.arange(n), labels] -= 1.0
    dlogits *= (w / wsum)[:, None]
    return loss, dlogits


def euclidean_loss(pred: np.ndarray, targets: np.ndarray):
    """Half mean squared error over scalar predictions; (loss, dpred)."""
    pred = pred.reshape(-1)
    targets = np.asarray(targets, dtype=np.float64).reshape(-1)
    n = pred.shape[0]
    diff = pred - targets
    loss = float(0.5 * np.mean(diff**2))
    return loss, (diff / n).reshape(-1, 1)
