# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled im2col / col2im / max-pool kernels.

These mirror the numpy fallbacks in kernels.py exactly, including
accumulation order, so both backends produce bit-identical results.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def im2col(cnp.float64_t[:, :, :, ::1] x, int kh, int kw, int stride, int pad):
    cdef int N = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3]
    cdef int Ho = (H + 2 * pad - kh) // stride + 1
    cdef int Wo = (W + 2 * pad - kw) // stride + 1
    out = np.zeros((N, C, kh, kw, Ho, Wo), dtype=np.float64)
    cdef cnp.float64_t[:, :, :, :, :, ::1] o = out
    cdef int n, c, i, j, ph, pw, h, w
    for n in range(N):
        for c in range(C):
            for i in range(kh):
                for j in range(kw):
                    for ph in range(Ho):
                        h = ph * stride + i - pad
                        if h < 0 or h >= H:
                            continue
                        for pw in range(Wo):
                            w = pw * stride + j - pad
                            if w < 0 or w >= W:
                                continue
                            o[n, c, i, j, ph, pw] = x[n, c, h, w]
    return out


def col2im(cnp.float64_t[:, :, :, :, :, ::1] cols, int N, int C, int H, int W,
           int kh, int kw, int stride, int pad):
    cdef int Ho = cols.shape[4], Wo = cols.shape[5]
    out = np.zeros((N, C, H, W), dtype=np.float64)
    cdef cnp.float64_t[:, :, :, ::1] o = out
    cdef int n, c, i, j, ph, pw, h, w
    # (i, j) outermost to match the fallback's accumulation order
    for i in range(kh):
        for j in range(kw):
            for n in range(N):
                for c in range(C):
                    for ph in range(Ho):
                        h = ph * stride + i - pad
                        if h < 0 or h >= H:
                            continue
                        for pw in range(Wo):
                            w = pw * stride + j - pad
                            if w < 0 or w >= W:
                                continue
                            o[n, c, h, w] += cols[n, c, i, j, ph, pw]
    return out


def maxpool_forward(cnp.float64_t[:, :, :, ::1] x, int k, int stride):
    cdef int N = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3]
    cdef int Ho = (H - k) // stride + 1
    cdef int Wo = (W - k) // stride + 1
    out = np.empty((N, C, Ho, Wo), dtype=np.float64)
    arg = np.empty((N, C, Ho, Wo), dtype=np.int64)
    cdef cnp.float64_t[:, :, :, ::1] o = out
    cdef cnp.int64_t[:, :, :, ::1] a = arg
    cdef int n, c, ph, pw, i, j, best
    cdef double v, m
    for n in range(N):
        for c in range(C):
            for ph in range(Ho):
                for pw in range(Wo):
                    m = x[n, c, ph * stride, pw * stride]
                    best = 0
                    for i in range(k):
                        for j in range(k):
                            v = x[n, c, ph * stride + i, pw * stride + j]
                            if v > m:
                                m = v
                                best = i * k + j
                    o[n, c, ph, pw] = m
                    a[n, c, ph, pw] = best
    return out, arg
