"""Hot numeric kernels: patch extraction for convolution and radix-2 FFT.

Each kernel has a numba implementation and a pure-numpy implementation with
identical semantics. The public names dispatch on :mod:`ntnet._accel`; the
``*_numpy`` / ``*_numba`` variants stay importable for benchmarking and
cross-checking.
"""
import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ._accel import HAVE_NUMBA, njit

# ---------------------------------------------------------------------------
# im2col / col2im
#
# Layout: padded input (N, C, Hp, Wp) <-> columns (C*kh*kw, N*Ho*Wo), row index
# c*kh*kw + i*kw + j, column index n*Ho*Wo + oh*Wo + ow.
# ---------------------------------------------------------------------------


def im2col_numpy(xp, kh, kw, stride, ho, wo):
    n, c = xp.shape[:2]
    win = sliding_window_view(xp, (kh, kw), axis=(2, 3))
    win = win[:, :, : (ho - 1) * stride + 1 : stride, : (wo - 1) * stride + 1 : stride]
    return np.ascontiguousarray(win.transpose(1, 4, 5, 0, 2, 3)).reshape(c * kh * kw, n * ho * wo)


def col2im_numpy(cols, shape, kh, kw, stride, ho, wo):
    n, c, hp, wp = shape
    cols6 = cols.reshape(c, kh, kw, n, ho, wo)
    out = np.zeros(shape, dtype=cols.dtype)
    for i in range(kh):
        for j in range(kw):
            out[:, :, i : i + stride * ho : stride, j : j + stride * wo : stride] += cols6[:, i, j].transpose(1, 0, 2, 3)
    return out


def _im2col_loops(xp, kh, kw, stride, ho, wo):
    n, c, hp, wp = xp.shape
    hw = ho * wo
    cols = np.empty((c * kh * kw, n * hw), dtype=xp.dtype)
    for ci in range(c):
        for i in range(kh):
            for j in range(kw):
                row = (ci * kh + i) * kw + j
                for b in range(n):
                    base = b * hw
                    for oh in range(ho):
                        y = oh * stride + i
                        for ow in range(wo):
                            cols[row, base + oh * wo + ow] = xp[b, ci, y, ow * stride + j]
    return cols


def _col2im_loops(cols, out, kh, kw, stride, ho, wo):
    n, c, hp, wp = out.shape
    hw = ho * wo
    for ci in range(c):
        for i in range(kh):
            for j in range(kw):
                row = (ci * kh + i) * kw + j
                for b in range(n):
                    base = b * hw
                    for oh in range(ho):
                        y = oh * stride + i
                        for ow in range(wo):
                            out[b, ci, y, ow * stride + j] += cols[row, base + oh * wo + ow]
    return out


# ---------------------------------------------------------------------------
# FFT along the last axis of a 2-D complex array (rows are independent)
# ---------------------------------------------------------------------------


def is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def _bitrev_indices(n):
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


def fft_rows_numpy(a, inverse=False):
    """Unnormalized radix-2 DFT of each row; ``inverse`` flips the exponent sign."""
    a = np.asarray(a, dtype=np.complex128)
    b, n = a.shape
    out = a[:, _bitrev_indices(n)]
    sign = 1.0 if inverse else -1.0
    size = 2
    while size <= n:
        half = size // 2
        w = np.exp(sign * 2j * np.pi * np.arange(half) / size)
        blocks = out.reshape(b, n // size, 2, half)
        u = blocks[:, :, 0, :]
        v = blocks[:, :, 1, :] * w
        out = np.concatenate((u + v, u - v), axis=2).reshape(b, n)
        size *= 2
    return out


def _fft_rows_loops(a, inverse):
    b, n = a.shape
    out = np.empty_like(a)
    bits = 0
    while (1 << bits) < n:
        bits += 1
    for i in range(n):
        r = 0
        x = i
        for _ in range(bits):
            r = (r << 1) | (x & 1)
            x >>= 1
        for k in range(b):
            out[k, r] = a[k, i]
    sign = 1.0 if inverse else -1.0
    size = 2
    while size <= n:
        half = size // 2
        for m in range(half):
            ang = sign * 2.0 * math.pi * m / size
            w = complex(math.cos(ang), math.sin(ang))
            for start in range(0, n, size):
                p = start + m
                q = p + half
                for k in range(b):
                    u = out[k, p]
                    v = out[k, q] * w
                    out[k, p] = u + v
                    out[k, q] = u - v
        size *= 2
    return out


def dft_rows_direct(a, inverse=False):
    """O(n^2) DFT of each row for arbitrary n."""
    a = np.asarray(a, dtype=np.complex128)
    n = a.shape[-1]
    k = np.arange(n)
    # reduce k*j mod n before scaling to keep the phase accurate
    phase = (np.outer(k, k) % n) * (2.0 * np.pi / n)
    sign = 1.0 if inverse else -1.0
    mat = np.exp(sign * 1j * phase)
    return a @ mat.T


if HAVE_NUMBA:
    _im2col_nb = njit(_im2col_loops)
    _col2im_nb = njit(_col2im_loops)
    _fft_rows_nb = njit(_fft_rows_loops)

    def im2col_numba(xp, kh, kw, stride, ho, wo):
        return _im2col_nb(np.ascontiguousarray(xp), kh, kw, stride, ho, wo)

    def col2im_numba(cols, shape, kh, kw, stride, ho, wo):
        out = np.zeros(shape, dtype=cols.dtype)
        return _col2im_nb(np.ascontiguousarray(cols), out, kh, kw, stride, ho, wo)

    def fft_rows_numba(a, inverse=False):
        return _fft_rows_nb(np.ascontiguousarray(a, dtype=np.complex128), inverse)

    im2col = im2col_numba
    col2im = col2im_numba
    fft_rows_pow2 = fft_rows_numba
else:
    im2col_numba = col2im_numba = fft_rows_numba = None
    im2col = im2col_numpy
    col2im = col2im_numpy
    fft_rows_pow2 = fft_rows_numpy


def fft_rows(a, inverse=False):
    a = np.asarray(a, dtype=np.complex128)
    if is_pow2(a.shape[-1]):
        return fft_rows_pow2(a, inverse)
    return dft_rows_direct(a, inverse)


def fft2_last(a, inverse=False):
    """Unnormalized 2-D DFT over the last two axes of an array of any rank."""
    a = np.asarray(a, dtype=np.complex128)
    shape = a.shape
    h, w = shape[-2:]
    rows = fft_rows(a.reshape(-1, w), inverse).reshape(shape)
    cols = np.swapaxes(rows, -1, -2).reshape(-1, h)
    cols = fft_rows(cols, inverse).reshape(shape[:-2] + (w, h))
    return np.ascontiguousarray(np.swapaxes(cols, -1, -2))
