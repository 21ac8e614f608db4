"""Adam training loop over the from-scratch network.

Deterministic for a fixed seed: initialization and epoch shuffling both
draw from one seeded generator, and gradient reduction order is fixed.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from ..errors import DivergedLoss, EmptyDataset, LabelOutOfRange
from .network import Network, NetworkSpec, cross_entropy, euclidean_loss


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 32
    epochs: int = 10
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    seed: int = 0
    class_weights: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.batch_size < 1 or self.epochs < 1:
            raise ValueError("batch_size and epochs must be >= 1")
        for b in (self.adam_beta1, self.adam_beta2):
            if not (0.0 < b < 1.0):
                raise ValueError("adam betas must be in (0, 1)")

    def to_dict(self) -> dict:
        return {
            "batch_size": self.batch_size,
            "epochs": self.epochs,
            "learning_rate": self.learning_rate,
            "adam_beta1": self.adam_beta1,
            "adam_beta2": self.adam_beta2,
            "adam_epsilon": self.adam_epsilon,
            "seed": self.seed,
            "class_weights": list(self.class_weights) if self.class_weights else None,
        }


@dataclass
class ModelArtifact:
    spec: NetworkSpec
    label_map: dict[int, str]
    network: Network
    metadata: dict = field(default_factory=dict)
    format_version: int = 1


class Adam:
    def __init__(self, network: Network, config: TrainConfig):
        self.net = network
        self.cfg = config
        self.t = 0
        self.m = {(ln, pn): np.zeros_like(p) for ln, pn, p in network.parameters()}
        self.v = {(ln, pn): np.zeros_like(p) for ln, pn, p in network.parameters()}

    def step(self):
        self.t += 1
        c = self.cfg
        bias1 = 1.0 - c.adam_beta1**self.t
        bias2 = 1.0 - c.adam_beta2**self.t
        for (ln, pn, p), (_, _, g) in zip(self.net.parameters(), self.net.grads()):
            key = (ln, pn)
            self.m[key] = c.adam_beta1 * self.m[key] + (1 - c.adam_beta1) * g
            self.v[key] = c.adam_beta2 * self.v[key] + (1 - c.adam_beta2) * g * g
            m_hat = self.m[key] / bias1
            v_hat = self.v[key] / bias2
            p -= c.learning_rate * m_hat / (np.sqrt(v_hat) + c.adam_epsilon)


def inverse_frequency_weights(labels: np.ndarray, num_classes: int) -> tuple[float, ...]:
    """Per-class weights proportional to 1/frequency, normalized to mean 1."""
    counts = np.bincount(labels, minlength=num_classes).astype(np.float64)
    counts = np.maximum(counts, 1.0)
    w = 1.0 / counts
    w *= num_classes / w.sum()
    return tuple(w)


def data_fingerprint(frames: np.ndarray, targets: np.ndarray) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(frames).tobytes())
    h.update(np.ascontiguousarray(targets).tobytes())
    return h.hexdigest()[:16]


def train(
    spec: NetworkSpec,
    frames: np.ndarray,
    targets: np.ndarray,
    config: TrainConfig,
    label_map: dict[int, str] | None = None,
) -> ModelArtifact:
    """Train a network on (N, 3, H, W) float frames in [0, 1].

    ``targets`` are integer class labels for classifier heads, float
    scalars for the regressor head. Raises DivergedLoss if the loss goes
    non-finite.
    """
    frames = np.asarray(frames, dtype=np.float64)
    if frames.shape[0] == 0:
        raise EmptyDataset("no training frames")
    classifier = spec.head == "softmax-classifier"
    if classifier:
        targets = np.asarray(targets, dtype=np.int64)
        if targets.min() < 0 or targets.max() >= spec.num_classes:
            raise LabelOutOfRange(
                f"labels must be in [0, {spec.num_classes}), got "
                f"[{targets.min()}, {targets.max()}]"
            )
    else:
        targets = np.asarray(targets, dtype=np.float64)

    rng = np.random.default_rng(np.random.PCG64(config.seed))
    net = Network(spec, rng)
    opt = Adam(net, config)
    n = frames.shape[0]
    final_loss = float("nan")
    loss_history: list[float] = []
    for _epoch in range(config.epochs):
        order = rng.permutation(n)
        epoch_losses = []
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            batch = frames[idx]
            ys = targets[idx]
            logits = net.forward(batch, train=True)
            if classifier:
                loss, dlogits = cross_entropy(logits, ys, config.class_weights)
            else:
                loss, dlogits = euclidean_loss(logits, ys)
            if not np.isfinite(loss):
                raise DivergedLoss(f"loss became {loss} at epoch {_epoch}")
            net.backward(dlogits)
            opt.step()
            epoch_losses.append(loss)
        final_loss = float(np.mean(epoch_losses))
        loss_history.append(final_loss)

    return ModelArtifact(
        spec=spec,
        label_map=label_map or {i: str(i) for i in range(spec.num_classes)},
        network=net,
        metadata={
            "config": config.to_dict(),
            "final_loss": final_loss,
            "loss_history": loss_history,
            "data_fingerprint": data_fingerprint(frames, targets),
        },
    )
