"""Seeded random streams and noise synthesis.

Uniform bits come from numpy's PCG64 (O'Neill's permuted congruential
generator, 128-bit state, 64-bit output); normals use the Box-Muller
transform on those bits so the stream is fixed by the raw generator alone.
Child streams are derived with :class:`numpy.random.SeedSequence`, which
hashes ``(seed, *keys)`` into independent states.

Noise fields are (H, W, C) arrays in normalized pixel units, where 1.0
corresponds to 255 eight-bit levels.
"""
from __future__ import annotations

from typing import Sequence, Tuple

import numpy as np

_TWO_POW_M53 = 2.0 ** -53


class Prng:
    """Single-owner random stream. Use :meth:`split` for per-purpose children."""

    def __init__(self, seed: int, keys: Sequence[int] = ()):
        self.seed = int(seed)
        self.keys = tuple(int(k) for k in keys)
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.keys)
        self._bits = np.random.PCG64(ss)

    def split(self, *keys: int) -> "Prng":
        return Prng(self.seed, self.keys + tuple(keys))

    def raw(self, n: int) -> np.ndarray:
        return self._bits.random_raw(int(n))

    def uniform(self, shape=(), lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
        """Uniform doubles in [lo, hi) built from the top 53 bits."""
        n = int(np.prod(shape, dtype=np.int64))
        u = (self.raw(n) >> np.uint64(11)).astype(np.float64) * _TWO_POW_M53
        return (lo + (hi - lo) * u).reshape(shape)

    def uniform_open0(self, shape=()) -> np.ndarray:
        """Uniform doubles in (0, 1]."""
        n = int(np.prod(shape, dtype=np.int64))
        u = ((self.raw(n) >> np.uint64(11)).astype(np.float64) + 1.0) * _TWO_POW_M53
        return u.reshape(shape)

    def normal(self, shape=(), mu: float = 0.0, sigma: float = 1.0) -> np.ndarray:
        n = int(np.prod(shape, dtype=np.int64))
        m = (n + 1) // 2
        u1 = self.uniform_open0((m,))
        u2 = self.uniform((m,))
        r = np.sqrt(-2.0 * np.log(u1))
        z = np.empty(2 * m)
        z[0::2] = r * np.cos(2.0 * np.pi * u2)
        z[1::2] = r * np.sin(2.0 * np.pi * u2)
        return (mu + sigma * z[:n]).reshape(shape)

    def integers(self, lo: int, hi: int, size=None):
        """Integers in [lo, hi); scalar when ``size`` is None."""
        span = hi - lo
        if span <= 0:
            raise ValueError(f"empty integer range [{lo}, {hi})")
        shape = () if size is None else size
        vals = lo + np.floor(self.uniform(shape) * span).astype(np.int64)
        return int(vals) if size is None else vals

    def coin(self) -> bool:
        return bool(self.uniform() < 0.5)


class NoiseField:
    """A noise realization with its population moments."""

    __slots__ = ("values", "mu_hat", "sigma_hat")

    def __init__(self, values):
        values = np.asarray(values, dtype=np.float64)
        if values.ndim == 2:
            values = values[:, :, None]
        if values.ndim != 3:
            raise ValueError(f"NoiseField expects (H, W, C) values, got shape {values.shape}")
        if values.size == 0:
            raise ValueError("NoiseField is empty")
        self.values = values
        self.mu_hat = float(values.mean())
        self.sigma_hat = float(values.std())

    @property
    def shape(self) -> Tuple[int, int, int]:
        return self.values.shape

    @classmethod
    def from_chw(cls, arr) -> "NoiseField":
        return cls(np.transpose(np.asarray(arr), (1, 2, 0)))

    def to_chw(self) -> np.ndarray:
        return np.ascontiguousarray(np.transpose(self.values, (2, 0, 1)))

    def __repr__(self) -> str:
        return f"NoiseField(shape={self.shape}, mu_hat={self.mu_hat:.4g}, sigma_hat={self.sigma_hat:.4g})"


def _check_shape(shape) -> Tuple[int, int, int]:
    shape = tuple(int(s) for s in shape)
    if len(shape) == 2:
        shape = shape + (1,)
    if len(shape) != 3 or min(shape) < 1:
        raise ValueError(f"expected (H, W, C) shape, got {shape}")
    return shape


def sample_gaussian(prng: Prng, shape, mu: float = 0.0, sigma: float = 1.0) -> NoiseField:
    if sigma < 0:
        raise ValueError(f"sigma must be non-negative, got {sigma}")
    return NoiseField(prng.normal(_check_shape(shape), mu, sigma))


def box3x3(values: np.ndarray) -> np.ndarray:
    """3x3 mean filter over the first two axes with zero padding."""
    h, w = values.shape[:2]
    p = np.pad(values, ((1, 1), (1, 1)) + ((0, 0),) * (values.ndim - 2))
    out = np.zeros_like(values)
    for di in range(3):
        for dj in range(3):
            out += p[di:di + h, dj:dj + w]
    return out / 9.0


def synth_correlated(prng: Prng, shape, sigma: float) -> NoiseField:
    """Box-filtered white Gaussian noise; interior pixels have std ``sigma``.

    Neighbouring interior pixels share 6 of 9 taps, so the lag-1 correlation
    is 2/3 and vanishes beyond lag 2.
    """
    h, w, c = _check_shape(shape)
    if h < 3 or w < 3:
        raise ValueError(f"synth_correlated needs H, W >= 3, got {(h, w)}")
    if sigma < 0:
        raise ValueError(f"sigma must be non-negative, got {sigma}")
    white = prng.normal((h, w, c))
    # filtered unit white noise has variance 9/81 in the interior
    return NoiseField(3.0 * sigma * box3x3(white))


def synth_signal_dependent(prng: Prng, clean, a: float, b: float) -> NoiseField:
    """Gaussian approximation of Poisson-Gaussian noise, variance ``a*x + b``.

    ``clean`` is (H, W, C) or (H, W) with values in [0, 1].
    """
    if a < 0 or b < 0:
        raise ValueError(f"a and b must be non-negative, got a={a}, b={b}")
    clean = np.asarray(clean, dtype=np.float64)
    if clean.ndim == 2:
        clean = clean[:, :, None]
    if clean.size and (clean.min() < 0 or clean.max() > 1):
        raise ValueError("clean image values must lie in [0, 1]")
    std = np.sqrt(a * clean + b)
    return NoiseField(std * prng.normal(clean.shape))


def sample_rayleigh(prng: Prng, count: int, sigma: float) -> np.ndarray:
    if sigma <= 0:
        raise ValueError(f"Rayleigh scale must be positive, got {sigma}")
    u = prng.uniform_open0((int(count),))
    return sigma * np.sqrt(-2.0 * np.log(u))
