"""Trainable layers with explicit forward/backward passes.

All math is float64. Each layer exposes ``params`` and ``grads`` dicts
(same keys) plus optional non-trainable ``buffers`` (batch-norm running
statistics). ``forward(x, train)`` caches whatever ``backward(dout)``
needs; backward returns the gradient w.r.t. the input.
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeMismatch
from . import kernels


class Layer:
    name: str = "layer"

    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self.buffers: dict[str, np.ndarray] = {}

    def forward(self, x: np.ndarray, train: bool) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dout: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def output_shape(self, in_shape: tuple) -> tuple:
        raise NotImplementedError


class Conv2d(Layer):
    def __init__(self, name, in_channels, out_channels, kernel, stride, pad, rng):
        super().__init__()
        self.name = name
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel = kernel
        self.stride = stride
        self.pad = pad
        fan_in = in_channels * kernel * kernel
        fan_out = out_channels * kernel * kernel
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        self.params["weight"] = rng.uniform(
            -bound, bound, size=(out_channels, in_channels, kernel, kernel)
        )
        self.params["bias"] = np.zeros(out_channels)

    def output_shape(self, in_shape):
        c, h, w = in_shape
        if c != self.in_channels:
            raise ShapeMismatch(self.name, f"expected {self.in_channels} channels, got {c}")
        ho = (h + 2 * self.pad - self.kernel) // self.stride + 1
        wo = (w + 2 * self.pad - self.kernel) // self.stride + 1
        if ho <= 0 or wo <= 0:
            raise ShapeMismatch(self.name, f"input {h}x{w} too small")
        return (self.out_channels, ho, wo)

    def forward(self, x, train):
        if x.ndim != 4:
            raise ShapeMismatch(self.name, f"bad input rank {x.ndim}")
        n = x.shape[0]
        _, ho, wo = self.output_shape(x.shape[1:])
        cols = kernels.im2col(x, self.kernel, self.kernel, self.stride, self.pad)
        # (N, C*k*k, Ho*Wo)
        cols2 = cols.reshape(n, self.in_channels * self.kernel * self.kernel, ho * wo)
        w_mat = self.params["weight"].reshape(self.out_channels, -1)
        out = np.einsum("oc,ncl->nol", w_mat, cols2, optimize=True)
        out += self.params["bias"][None, :, None]
        self._cache = (x.shape, cols2, ho, wo)
        return out.reshape(n, self.out_channels, ho, wo)

    def backward(self, dout):
        x_shape, cols2, ho, wo = self._cache
        n = x_shape[0]
        dout2 = dout.reshape(n, self.out_channels, ho * wo)
        w_mat = self.params["weight"].reshape(self.out_channels, -1)
        self.grads["weight"] = np.einsum(
            "nol,ncl->oc", dout2, cols2, optimize=True
        ).reshape(self.params["weight"].shape)
        self.grads["bias"] = dout2.sum(axis=(0, 2))
        dcols2 = np.einsum("oc,nol->ncl", w_mat, dout2, optimize=True)
        dcols = dcols2.reshape(
            n, self.in_channels, self.kernel, self.kernel, ho, wo
        )
        return kernels.col2im(dcols, x_shape, self.kernel, self.kernel, self.stride, self.pad)


class BatchNorm(Layer):
    """Batch normalization over (N, H, W) per channel, or (N,) per feature."""

    def __init__(self, name, channels, epsilon=1e-5, momentum=0.1):
        super().__init__()
        self.name = name
        self.channels = channels
        self.epsilon = epsilon
        self.momentum = momentum
        self.params["gamma"] = np.ones(channels)
        self.params["beta"] = np.zeros(channels)
        self.buffers["running_mean"] = np.zeros(channels)
        self.buffers["running_var"] = np.ones(channels)

    def output_shape(self, in_shape):
        c = in_shape[0] if len(in_shape) == 3 else in_shape[-1]
        if c != self.channels:
            raise ShapeMismatch(self.name, f"expected {self.channels} channels, got {c}")
        return in_shape

    def _moments_axes(self, x):
        return (0, 2, 3) if x.ndim == 4 else (0,)

    def _reshape(self, v, ndim):
        return v.reshape(1, -1, 1, 1) if ndim == 4 else v.reshape(1, -1)

    def forward(self, x, train):
        axes = self._moments_axes(x)
        if train:
            mean = x.mean(axis=axes)
            var = x.var(axis=axes)
            self.buffers["running_mean"] = (
                (1 - self.momentum) * self.buffers["running_mean"] + self.momentum * mean
            )
            self.buffers["running_var"] = (
                (1 - self.momentum) * self.buffers["running_var"] + self.momentum * var
            )
        else:
            mean = self.buffers["running_mean"]
            var = self.buffers["running_var"]
        inv_std = 1.0 / np.sqrt(var + self.epsilon)
        xhat = (x - self._reshape(mean, x.ndim)) * self._reshape(inv_std, x.ndim)
        out = self._reshape(self.params["gamma"], x.ndim) * xhat + self._reshape(
            self.params["beta"], x.ndim
        )
        self._cache = (xhat, inv_std, x.ndim, x.shape, train)
        return out

    def backward(self, dout):
        xhat, inv_std, ndim, shape, train = self._cache
        axes = (0, 2, 3) if ndim == 4 else (0,)
        m = np.prod([shape[a] for a in axes])
        self.grads["gamma"] = (dout * xhat).sum(axis=axes)
        self.grads["beta"] = dout.sum(axis=axes)
        gamma = self._reshape(self.params["gamma"], ndim)
        dxhat = dout * gamma
        if not train:
            return dxhat * self._reshape(inv_std, ndim)
        inv = self._reshape(inv_std, ndim)
        sum_dxhat = dxhat.sum(axis=axes, keepdims=True)
        sum_dxhat_xhat = (dxhat * xhat).sum(axis=axes, keepdims=True)
        return (inv / m) * (m * dxhat - sum_dxhat - xhat * sum_dxhat_xhat)


class ReLU(Layer):
    def __init__(self, name):
        super().__init__()
        self.name = name

    def output_shape(self, in_shape):
        return in_shape

    def forward(self, x, train):
        self._mask = x > 0
        return x * self._mask

    def backward(self, dout):
        return dout * self._mask


class MaxPool(Layer):
    def __init__(self, name, kernel, stride):
        super().__init__()
        self.name = name
        self.kernel = kernel
        self.stride = stride

    def output_shape(self, in_shape):
        c, h, w = in_shape
        ho = (h - self.kernel) // self.stride + 1
        wo = (w - self.kernel) // self.stride + 1
        if ho <= 0 or wo <= 0:
            raise ShapeMismatch(self.name, f"input {h}x{w} too small")
        return (c, ho, wo)

    def forward(self, x, train):
        out, arg = kernels.maxpool_forward(x, self.kernel, self.stride)
        self._cache = (arg, x.shape)
        return out

    def backward(self, dout):
        arg, x_shape = self._cache
        return kernels.maxpool_backward(dout, arg, x_shape, self.kernel, self.stride)


class Flatten(Layer):
    def __init__(self, name):
        super().__init__()
        self.name = name

    def output_shape(self, in_shape):
        return (int(np.prod(in_shape)),)

    def forward(self, x, train):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dout):
        return dout.reshape(self._shape)


class FullyConnected(Layer):
    def __init__(self, name, in_features, out_features, rng):
        super().__init__()
        self.name = name
        self.in_features = in_features
        self.out_features = out_features
        bound = np.sqrt(6.0 / (in_features + out_features))
        self.params["weight"] = rng.uniform(-bound, bound, size=(in_features, out_features))
        self.params["bias"] = np.zeros(out_features)

    def output_shape(self, in_shape):
        if len(in_shape) != 1 or in_shape[0] != self.in_features:
            raise ShapeMismatch(
                self.name, f"expected ({self.in_features},), got {in_shape}"
            )
        return (self.out_features,)

    def forward(self, x, train):
        if x.shape[1] != self.in_features:
            raise ShapeMismatch(self.name, f"expected {self.in_features} features")
        self._x = x
        return x @ self.params["weight"] + self.params["bias"]

    def backward(self, dout):
        self.grads["weight"] = self._x.T @ dout
        self.grads["bias"] = dout.sum(axis=0)
        return dout @ self.params["weight"].T
