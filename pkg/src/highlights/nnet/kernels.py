"""Hot-loop kernels with backend selection at import.

The compiled Cython extension is preferred; a pure-numpy fallback keeps
the package usable without a build step. Both backends are bit-identical
(same gather order, same accumulation order); ``benchmarks/bench_kernels.py``
compares their throughput.
"""

from __future__ import annotations

import numpy as np

try:  # pragma: no cover - depends on build environment
    from . import _ckernels

    BACKEND = "cython"
except ImportError:  # pragma: no cover
    _ckernels = None
    BACKEND = "numpy"


def _im2col_numpy(x: np.ndarray, kh: int, kw: int, stride: int, pad: int) -> np.ndarray:
    N, C, H, W = x.shape
    Ho = (H + 2 * pad - kh) // stride + 1
    Wo = (W + 2 * pad - kw) // stride + 1
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else x
    cols = np.zeros((N, C, kh, kw, Ho, Wo), dtype=np.float64)
    for i in range(kh):
        for j in range(kw):
            cols[:, :, i, j] = xp[:, :, i : i + stride * Ho : stride, j : j + stride * Wo : stride]
    return cols


def _col2im_numpy(
    cols: np.ndarray, N: int, C: int, H: int, W: int, kh: int, kw: int, stride: int, pad: int
) -> np.ndarray:
    Ho, Wo = cols.shape[4], cols.shape[5]
    xp = np.zeros((N, C, H + 2 * pad, W + 2 * pad), dtype=np.float64)
    for i in range(kh):
        for j in range(kw):
            xp[:, :, i : i + stride * Ho : stride, j : j + stride * Wo : stride] += cols[:, :, i, j]
    if pad:
        return xp[:, :, pad : pad + H, pad : pad + W].copy()
    return xp


def _maxpool_forward_numpy(x: np.ndarray, k: int, stride: int):
    N, C, H, W = x.shape
    Ho = (H - k) // stride + 1
    Wo = (W - k) // stride + 1
    windows = np.lib.stride_tricks.as_strided(
        x,
        shape=(N, C, Ho, Wo, k, k),
        strides=(
            x.strides[0],
            x.strides[1],
            x.strides[2] * stride,
            x.strides[3] * stride,
            x.strides[2],
            x.strides[3],
        ),
    ).reshape(N, C, Ho, Wo, k * k)
    arg = windows.argmax(axis=4)
    out = np.take_along_axis(windows, arg[..., None], axis=4)[..., 0]
    return out.copy(), arg.astype(np.int64)


def im2col(x: np.ndarray, kh: int, kw: int, stride: int, pad: int) -> np.ndarray:
    """Gather conv patches: (N,C,H,W) -> (N,C,kh,kw,Ho,Wo)."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if _ckernels is not None:
        return _ckernels.im2col(x, kh, kw, stride, pad)
    return _im2col_numpy(x, kh, kw, stride, pad)


def col2im(
    cols: np.ndarray, x_shape, kh: int, kw: int, stride: int, pad: int
) -> np.ndarray:
    """Scatter-add conv patches back: inverse accumulation of im2col."""
    N, C, H, W = x_shape
    cols = np.ascontiguousarray(cols, dtype=np.float64)
    if _ckernels is not None:
        return _ckernels.col2im(cols, N, C, H, W, kh, kw, stride, pad)
    return _col2im_numpy(cols, N, C, H, W, kh, kw, stride, pad)


def maxpool_forward(x: np.ndarray, k: int, stride: int):
    """Max pooling; returns (out, argmax within each k*k window)."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if _ckernels is not None:
        return _ckernels.maxpool_forward(x, k, stride)
    return _maxpool_forward_numpy(x, k, stride)


def maxpool_backward(dout: np.ndarray, arg: np.ndarray, x_shape, k: int, stride: int):
    N, C, H, W = x_shape
    Ho, Wo = dout.shape[2], dout.shape[3]
    dx = np.zeros(x_shape, dtype=np.float64)
    n, c, ph, pw = np.indices((N, C, Ho, Wo))
    h = ph * stride + arg // k
    w = pw * stride + arg % k
    np.add.at(dx, (n, c, h, w), dout)
    return dx
