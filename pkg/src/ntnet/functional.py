"""Differentiable network and loss primitives on NCHW tensors."""
import numpy as np

from . import kernels
from .tensor import ShapeError, Tensor, as_tensor, make_node

MAG_EPS = 1e-12


def conv2d(x: Tensor, weight: Tensor, bias=None, stride: int = 1, padding: int = 0) -> Tensor:
    """2-D cross-correlation, ``weight`` laid out as (Co, Ci, kh, kw)."""
    if x.data.ndim != 4 or weight.data.ndim != 4:
        raise ShapeError(f"conv2d: expected 4-D input and kernel, got {x.shape} and {weight.shape}")
    if stride < 1 or padding < 0:
        raise ValueError(f"conv2d: invalid stride={stride} padding={padding}")
    n, c, h, w = x.shape
    co, ci, kh, kw = weight.shape
    if ci != c:
        raise ShapeError(f"conv2d: input {x.shape} has {c} channels, kernel {weight.shape} expects {ci}")
    if bias is not None and bias.shape != (co,):
        raise ShapeError(f"conv2d: bias {bias.shape} does not match kernel {weight.shape}")
    hp, wp = h + 2 * padding, w + 2 * padding
    if hp < kh or wp < kw or (hp - kh) % stride or (wp - kw) % stride:
        raise ShapeError(f"conv2d: input {x.shape} incompatible with kernel {weight.shape}, "
                         f"stride={stride}, padding={padding}")
    ho, wo = (hp - kh) // stride + 1, (wp - kw) // stride + 1

    xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding), (padding, padding))) if padding else x.data
    cols = kernels.im2col(xp, kh, kw, stride, ho, wo)
    w2 = weight.data.reshape(co, -1)
    out = (w2 @ cols).reshape(co, n, ho, wo).transpose(1, 0, 2, 3)
    if bias is not None:
        out = out + bias.data.reshape(1, co, 1, 1)
    out = np.ascontiguousarray(out)

    def bw(g):
        g2 = g.transpose(1, 0, 2, 3).reshape(co, -1)
        gx = gw = gb = None
        if weight.requires_grad:
            gw = (g2 @ cols.T).reshape(weight.shape)
        if bias is not None and bias.requires_grad:
            gb = g.sum(axis=(0, 2, 3))
        if x.requires_grad:
            gxp = kernels.col2im(w2.T @ g2, xp.shape, kh, kw, stride, ho, wo)
            gx = gxp[:, :, padding:padding + h, padding:padding + w] if padding else gxp
            gx = np.ascontiguousarray(gx)
        return (gx, gw, gb)

    parents = (x, weight, bias) if bias is not None else (x, weight)
    return make_node(out, parents, bw, "conv2d")


def upsample_nearest2x(x: Tensor) -> Tensor:
    n, c, h, w = x.shape
    out = np.repeat(np.repeat(x.data, 2, axis=2), 2, axis=3)

    def bw(g):
        return (g.reshape(n, c, h, 2, w, 2).sum(axis=(3, 5)),)

    return make_node(out, (x,), bw, "upsample_nearest2x")


def simple_gate(x: Tensor) -> Tensor:
    """First half of the channels times the second half."""
    c2 = x.shape[1]
    if c2 % 2:
        raise ShapeError(f"simple_gate: channel count must be even, got shape {x.shape}")
    c = c2 // 2
    a, b = x.data[:, :c], x.data[:, c:]

    def bw(g):
        return (np.concatenate((g * b, g * a), axis=1),)

    return make_node(a * b, (x,), bw, "simple_gate")


def layer_norm_channels(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-6) -> Tensor:
    """Normalize across channels at every (n, h, w), then apply a per-channel affine map."""
    if eps <= 0:
        raise ValueError("layer_norm_channels: eps must be positive")
    c = x.shape[1]
    if gain.shape != (c,) or bias.shape != (c,):
        raise ShapeError(f"layer_norm_channels: gain {gain.shape} / bias {bias.shape} vs input {x.shape}")
    xd = x.data
    mu = xd.mean(axis=1, keepdims=True)
    xc = xd - mu
    var = (xc * xc).mean(axis=1, keepdims=True)
    rstd = 1.0 / np.sqrt(var + eps)
    xhat = xc * rstd
    gd = gain.data.reshape(1, c, 1, 1)
    out = xhat * gd + bias.data.reshape(1, c, 1, 1)

    def bw(g):
        ggain = (g * xhat).sum(axis=(0, 2, 3)) if gain.requires_grad else None
        gbias = g.sum(axis=(0, 2, 3)) if bias.requires_grad else None
        gx = None
        if x.requires_grad:
            dxhat = g * gd
            gx = rstd * (dxhat - dxhat.mean(axis=1, keepdims=True)
                         - xhat * (dxhat * xhat).mean(axis=1, keepdims=True))
        return (gx, ggain, gbias)

    return make_node(out, (x, gain, bias), bw, "layer_norm_channels")


def w1_sorted_loss(x: Tensor, ref) -> Tensor:
    """Order-statistics 1-Wasserstein distance, differentiable in ``x``.

    ``x`` and ``ref`` are (N, C, ...) arrays; each (n, c) slice is flattened and
    sorted. The result is the mean of |X_(i) - Y_(i)| over all elements, i.e.
    the per-image 1/(H*W*C) normalization averaged over the batch. The
    gradient is routed through the argsort permutation; ties give sign 0.
    """
    ref = np.asarray(ref.data if isinstance(ref, Tensor) else ref)
    if x.shape != ref.shape:
        raise ShapeError(f"w1_sorted_loss: incompatible shapes {x.shape} and {ref.shape}")
    lead = x.shape[:2]
    xf = x.data.reshape(lead + (-1,))
    order = np.argsort(xf, axis=-1, kind="stable")
    xs = np.take_along_axis(xf, order, axis=-1)
    ys = np.sort(ref.reshape(lead + (-1,)), axis=-1, kind="stable").astype(xs.dtype, copy=False)
    diff = xs - ys
    total = diff.size
    value = np.asarray(np.abs(diff).sum() / total, dtype=xs.dtype)
    sgn = np.sign(diff)

    def bw(g):
        gx = np.empty_like(xf)
        np.put_along_axis(gx, order, sgn * (g / total), axis=-1)
        return (gx.reshape(x.shape),)

    return make_node(value, (x,), bw, "w1_sorted")


def spectrum_magnitude(x: Tensor) -> Tensor:
    """|2-D DFT| over the last two axes; gradient at a zero coefficient is 0."""
    spec = kernels.fft2_last(x.data)
    mag = np.abs(spec)
    dt = x.dtype

    def bw(g):
        unit = np.where(mag > MAG_EPS, spec / np.maximum(mag, MAG_EPS), 0.0)
        gx = kernels.fft2_last(g * unit, inverse=True).real
        return (gx.astype(dt, copy=False),)

    return make_node(mag.astype(dt, copy=False), (x,), bw, "spectrum_magnitude")


def avg_pool2x(x: Tensor) -> Tensor:
    n, c, h, w = x.shape
    if h % 2 or w % 2:
        raise ShapeError(f"avg_pool2x: spatial size must be even, got {x.shape}")
    out = x.data.reshape(n, c, h // 2, 2, w // 2, 2).mean(axis=(3, 5))

    def bw(g):
        return (np.repeat(np.repeat(g, 2, axis=2), 2, axis=3) / 4.0,)

    return make_node(out, (x,), bw, "avg_pool2x")


__all__ = [
    "as_tensor",
    "avg_pool2x",
    "conv2d",
    "layer_norm_channels",
    "simple_gate",
    "spectrum_magnitude",
    "upsample_nearest2x",
    "w1_sorted_loss",
]
