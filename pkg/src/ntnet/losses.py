"""Translator objectives: implicit L1, spatial and frequency W1, and their weighted sums."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Optional, Tuple

import numpy as np

from . import kernels
from .functional import spectrum_magnitude, w1_sorted_loss
from .rand import NoiseField, Prng
from .tensor import ShapeError, Tensor, l1_mean, scale

DEFAULT_ALPHA = 5e-2
DEFAULT_BETA = 2e-3


@dataclass
class LossBreakdown:
    l_implicit: float
    l_spatial: float
    l_freq: float
    l_explicit: float
    l_total: float
    alpha: float
    beta: float

    @classmethod
    def compose(cls, l_implicit, l_spatial, l_freq, alpha, beta) -> "LossBreakdown":
        l_explicit = float(l_spatial) + beta * float(l_freq)
        return cls(float(l_implicit), float(l_spatial), float(l_freq), l_explicit,
                   float(l_implicit) + alpha * l_explicit, float(alpha), float(beta))

    def is_finite(self) -> bool:
        return all(np.isfinite(v) for v in asdict(self).values())

    def non_finite_components(self) -> list:
        return [k for k, v in asdict(self).items() if not np.isfinite(v)]

    def to_json(self, **extra) -> str:
        d = dict(extra)
        d.update(asdict(self))
        return json.dumps(d, sort_keys=True)


def gaussian_reference(prng: Prng, n_t) -> NoiseField:
    """Fresh i.i.d. N(mu_hat, sigma_hat) field shaped like ``n_t`` (moments over all elements)."""
    if not isinstance(n_t, NoiseField):
        n_t = NoiseField(n_t)
    return NoiseField(prng.normal(n_t.shape, n_t.mu_hat, n_t.sigma_hat))


def gaussian_reference_batch(prng: Prng, n_t: np.ndarray) -> np.ndarray:
    """Per-image matched references for an (N, C, H, W) batch of noise."""
    n_t = np.asarray(n_t)
    flat = n_t.reshape(n_t.shape[0], -1).astype(np.float64)
    mu = flat.mean(axis=1)
    sd = flat.std(axis=1)
    z = prng.normal(n_t.shape)
    return (mu.reshape(-1, 1, 1, 1) + sd.reshape(-1, 1, 1, 1) * z).astype(n_t.dtype)


def _as_nchw(field) -> np.ndarray:
    if isinstance(field, NoiseField):
        return field.to_chw()[None]
    return np.asarray(field.data if isinstance(field, Tensor) else field)


def loss_implicit(denoised: Tensor, gt) -> Tensor:
    gt_arr = gt.data if isinstance(gt, Tensor) else np.asarray(gt)
    if denoised.shape != gt_arr.shape:
        raise ShapeError(f"loss_implicit: incompatible shapes {denoised.shape} and {gt_arr.shape}")
    return l1_mean(denoised, gt)


def loss_spatial(n_t: Tensor, n_g) -> Tensor:
    return w1_sorted_loss(n_t, _as_nchw(n_g))


def loss_freq(n_t: Tensor, n_g) -> Tensor:
    ref = _as_nchw(n_g)
    if n_t.shape != ref.shape:
        raise ShapeError(f"loss_freq: incompatible shapes {n_t.shape} and {ref.shape}")
    ref_mag = np.abs(kernels.fft2_last(ref)).astype(n_t.dtype, copy=False)
    return w1_sorted_loss(spectrum_magnitude(n_t), ref_mag)


def loss_explicit(n_t: Tensor, n_g, beta: float = DEFAULT_BETA,
                  parts: bool = False):
    """Spatial W1 plus ``beta`` times frequency W1.

    With ``parts=True`` returns ``(explicit, spatial, freq)`` nodes.
    """
    if beta < 0:
        raise ValueError(f"beta must be non-negative, got {beta}")
    spatial = loss_spatial(n_t, n_g)
    freq = loss_freq(n_t, n_g)
    explicit = spatial + scale(freq, beta)
    return (explicit, spatial, freq) if parts else explicit


def loss_total(l_implicit: Tensor, l_explicit: Tensor, alpha: float = DEFAULT_ALPHA,
               l_spatial: Optional[Tensor] = None, l_freq: Optional[Tensor] = None,
               beta: float = DEFAULT_BETA) -> Tuple[Tensor, LossBreakdown]:
    if alpha < 0:
        raise ValueError(f"alpha must be non-negative, got {alpha}")
    total = l_implicit + scale(l_explicit, alpha)
    if l_spatial is None or l_freq is None:
        # explicit value only; attribute it to the spatial slot
        bd = LossBreakdown.compose(l_implicit.item(), l_explicit.item(), 0.0, alpha, 0.0)
    else:
        bd = LossBreakdown.compose(l_implicit.item(), l_spatial.item(), l_freq.item(), alpha, beta)
    return total, bd


def translation_objective(denoised: Tensor, gt, n_t: Tensor, n_g, alpha: float = DEFAULT_ALPHA,
                          beta: float = DEFAULT_BETA) -> Tuple[Tensor, LossBreakdown]:
    """The full translator loss for one step: implicit + alpha * (spatial + beta * freq)."""
    implicit = loss_implicit(denoised, gt)
    explicit, spatial, freq = loss_explicit(n_t, n_g, beta, parts=True)
    return loss_total(implicit, explicit, alpha, spatial, freq, beta)
