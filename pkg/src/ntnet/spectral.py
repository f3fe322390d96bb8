"""Channel-wise 2-D DFT of noise fields and the Rayleigh law of white-noise spectra."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .rand import NoiseField


@dataclass
class Spectrum:
    """Complex coefficients laid out (C, H, W); index (0, 0) is DC."""

    coeffs: np.ndarray

    @property
    def shape(self):
        return self.coeffs.shape


@dataclass
class SpectrumMagnitude:
    """|F| per channel. With ``special_excluded`` the values are a flat vector per channel."""

    values: np.ndarray
    special_excluded: bool

    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    def write_csv(self, path) -> None:
        np.savetxt(path, self.flat(), delimiter=",", header="magnitude", comments="")


def dft2_channelwise(field) -> Spectrum:
    """F^c(u, v) = sum_x sum_y n(x, y, c) exp(-2 pi i (u x / H + v y / W)).

    Radix-2 FFT for power-of-two sides, direct evaluation otherwise.
    """
    if not isinstance(field, NoiseField):
        field = NoiseField(field)
    return Spectrum(kernels.fft2_last(field.to_chw()))


def idft2_channelwise(spec: Spectrum) -> NoiseField:
    c, h, w = spec.shape
    vals = kernels.fft2_last(spec.coeffs, inverse=True) / (h * w)
    return NoiseField(np.transpose(vals.real, (1, 2, 0)))


def special_bin_mask(h: int, w: int) -> np.ndarray:
    """True at bins whose coefficient is real for every real input: DC and the Nyquist bins."""
    mask = np.zeros((h, w), dtype=bool)
    rows = {0} | ({h // 2} if h % 2 == 0 else set())
    cols = {0} | ({w // 2} if w % 2 == 0 else set())
    for r in rows:
        for c in cols:
            mask[r, c] = True
    return mask


def magnitude(spec: Spectrum, exclude_special_bins: bool = False) -> SpectrumMagnitude:
    mag = np.abs(spec.coeffs)
    if not exclude_special_bins:
        return SpectrumMagnitude(mag, False)
    c, h, w = mag.shape
    keep = ~special_bin_mask(h, w)
    return SpectrumMagnitude(mag[:, keep], True)


def complex_abs_grad(z) -> tuple:
    """(d|z|/dRe, d|z|/dIm); zero at z = 0."""
    z = np.asarray(z, dtype=np.complex128)
    m = np.abs(z)
    safe = np.where(m > 1e-12, m, 1.0)
    return np.where(m > 1e-12, z.real / safe, 0.0), np.where(m > 1e-12, z.imag / safe, 0.0)


def rayleigh_pdf(x, sigma: float):
    if sigma <= 0:
        raise ValueError(f"rayleigh_pdf: sigma must be positive, got {sigma}")
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < 0):
        raise ValueError("rayleigh_pdf: x must be non-negative")
    out = x / sigma ** 2 * np.exp(-x * x / (2.0 * sigma ** 2))
    return float(out) if out.ndim == 0 else out


def gaussian_spectrum_scale(sigma: float, h: int, w: int) -> float:
    """Rayleigh scale of the non-special DFT bins of H x W white noise with pixel std ``sigma``."""
    if sigma < 0:
        raise ValueError(f"sigma must be non-negative, got {sigma}")
    return sigma * math.sqrt(h * w / 2.0)


def rayleigh_quantiles(count: int, sigma: float) -> np.ndarray:
    """Rayleigh quantiles at the midpoints (i - 1/2) / count."""
    p = (np.arange(count) + 0.5) / count
    return sigma * np.sqrt(-2.0 * np.log1p(-p))
