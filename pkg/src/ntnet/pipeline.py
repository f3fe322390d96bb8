"""Inference, evaluation, noise analysis and the Gaussian-addition ablation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import norm

from . import data as data_mod
from .data import ImagePair
from .metrics import psnr, ssim
from .nets import Denoiser, Translator
from .rand import NoiseField, Prng
from .spectral import dft2_channelwise, gaussian_spectrum_scale, magnitude, rayleigh_quantiles
from .stats import Histogram, histogram, w1_sorted
from .tensor import ShapeError, Tensor

HIST_BINS = 64


def _batch(image: np.ndarray) -> np.ndarray:
    image = np.asarray(image, dtype=np.float32)
    return image[None] if image.ndim == 3 else image


def pad_reflect(x: np.ndarray, multiple: int) -> Tuple[np.ndarray, Tuple[int, int]]:
    h, w = x.shape[-2:]
    ph, pw = (-h) % multiple, (-w) % multiple
    if ph or pw:
        x = np.pad(x, ((0, 0), (0, 0), (0, ph), (0, pw)), mode="reflect")
    return x, (h, w)


def run_denoiser(image: np.ndarray, denoiser: Denoiser) -> np.ndarray:
    """Denoiser alone on a (C, H, W) or (N, C, H, W) image; output clamped to [0, 1]."""
    x = _batch(image)
    if x.shape[1] != denoiser.channels:
        raise ShapeError(f"image has {x.shape[1]} channels, denoiser expects {denoiser.channels}")
    xp, (h, w) = pad_reflect(x, 2 ** denoiser.depth)
    out = denoiser(Tensor(xp)).data[:, :, :h, :w]
    out = np.clip(out, 0.0, 1.0)
    return out[0] if np.ndim(image) == 3 else out


def denoise_pipeline(image: np.ndarray, translator: Translator, denoiser: Denoiser,
                     prng: Prng) -> Tuple[np.ndarray, np.ndarray]:
    """Translate then denoise. Returns ``(I_T, denoised)``; only the latter is clamped.

    The input is fed as-is (no Gaussian augmentation); the translator's internal
    injection stays active and draws from ``prng``.
    """
    x = _batch(image)
    for name, model in (("translator", translator), ("denoiser", denoiser)):
        if x.shape[1] != model.channels:
            raise ShapeError(f"image has {x.shape[1]} channels, {name} expects {model.channels}")
    xp, (h, w) = pad_reflect(x, 2 ** max(translator.depth, denoiser.depth))
    i_t = translator(Tensor(xp), prng)
    out = denoiser(i_t).data[:, :, :h, :w]
    i_t = i_t.data[:, :, :h, :w]
    out = np.clip(out, 0.0, 1.0)
    if np.ndim(image) == 3:
        return i_t[0], out[0]
    return i_t, out


def _mean_metrics(outputs: Sequence[np.ndarray], pairs: Sequence[ImagePair]) -> Dict[str, float]:
    ps = [psnr(o, p.clean) for o, p in zip(outputs, pairs)]
    ss = [ssim(o, p.clean) for o, p in zip(outputs, pairs)]
    return {"psnr": float(np.mean(ps)), "ssim": float(np.mean(ss))}


def evaluate(pairs: Sequence[ImagePair], denoiser: Denoiser, translator: Optional[Translator] = None,
             prng: Optional[Prng] = None) -> Dict[str, Dict[str, float]]:
    """Mean PSNR/SSIM of the noisy input, the denoiser alone and (optionally) the full pipeline."""
    res = {"noisy": _mean_metrics([p.noisy for p in pairs], pairs),
           "denoiser": _mean_metrics([run_denoiser(p.noisy, denoiser) for p in pairs], pairs)}
    if translator is not None:
        prng = prng or Prng(0)
        outs = [denoise_pipeline(p.noisy, translator, denoiser, prng.split(i))[1] for i, p in enumerate(pairs)]
        res["translated"] = _mean_metrics(outs, pairs)
    return res


def ablate_gaussian_addition(pairs: Sequence[ImagePair], denoiser: Denoiser,
                             levels: Sequence[float] = (0, 5, 10, 15),
                             translator: Optional[Translator] = None,
                             prng: Optional[Prng] = None) -> Dict[str, Dict[str, float]]:
    """Denoise I + N(0, (L/255)^2) for each level L; optionally add the translated row."""
    prng = prng or Prng(0)
    table = {}
    for li, level in enumerate(levels):
        outs = []
        for i, p in enumerate(pairs):
            noisy = np.clip(data_mod.add_gaussian_level(prng.split(li, i), p.noisy, level), 0.0, 1.0)
            outs.append(run_denoiser(noisy, denoiser))
        table[f"noise{level:g}"] = _mean_metrics(outs, pairs)
    if translator is not None:
        outs = [denoise_pipeline(p.noisy, translator, denoiser, prng.split(1000, i))[1]
                for i, p in enumerate(pairs)]
        table["translated"] = _mean_metrics(outs, pairs)
    return table


# ---------------------------------------------------------------------------
# noise analysis
# ---------------------------------------------------------------------------


@dataclass
class NoiseReport:
    mu_hat: float
    sigma_hat: float
    spatial_w1: float
    freq_w1: float
    lag1_h: float
    lag1_v: float
    signal_slope: float
    no_noise: bool
    spatial_hist: Histogram = field(repr=False)
    freq_hist: Histogram = field(repr=False)

    def summary(self) -> dict:
        return {k: getattr(self, k) for k in ("mu_hat", "sigma_hat", "spatial_w1", "freq_w1", "lag1_h",
                                              "lag1_v", "signal_slope", "no_noise")}

    def to_dict(self) -> dict:
        d = self.summary()
        d["spatial_hist"] = self.spatial_hist.to_dict()
        d["freq_hist"] = self.freq_hist.to_dict()
        return d


def _lag1(noise: np.ndarray, axis: int) -> float:
    """Pooled lag-1 autocorrelation of a (C, H, W) field along ``axis`` (1 = vertical, 2 = horizontal)."""
    c = noise - noise.mean()
    var = float((c * c).mean())
    if var == 0.0:
        return 0.0
    n = c.shape[axis]
    a = np.take(c, range(n - 1), axis=axis)
    b = np.take(c, range(1, n), axis=axis)
    return float((a * b).mean() / var)


def _signal_slope(noise: np.ndarray, clean: np.ndarray, block: int = 8) -> float:
    """Least-squares slope of local noise variance against local clean intensity."""
    ch, h, w = noise.shape
    hb, wb = h // block, w // block
    if hb == 0 or wb == 0:
        return 0.0
    nb = noise[:, :hb * block, :wb * block].reshape(ch, hb, block, wb, block)
    cb = clean[:, :hb * block, :wb * block].reshape(ch, hb, block, wb, block)
    var = nb.var(axis=(2, 4)).ravel()
    mean = cb.mean(axis=(2, 4)).ravel()
    if np.ptp(mean) == 0:
        return 0.0
    return float(np.polyfit(mean, var, 1)[0])


def gaussian_quantiles(count: int, mu: float, sigma: float) -> np.ndarray:
    p = (np.arange(count) + 0.5) / count
    return mu + sigma * norm.ppf(p)


def noise_report(noise: np.ndarray, clean: np.ndarray) -> NoiseReport:
    """Gaussianity diagnostics of a (C, H, W) noise field.

    References are deterministic: per-channel Gaussian quantiles at the
    empirical (mu, sigma) for the spatial distance, and Rayleigh quantiles at
    the white-noise scale for the non-DC/non-Nyquist spectrum magnitudes.
    """
    noise = np.asarray(noise, dtype=np.float64)
    c, h, w = noise.shape
    mu, sd = float(noise.mean()), float(noise.std())
    no_noise = sd == 0.0
    flat = noise.reshape(c, -1)
    if no_noise:
        spatial = freq = 0.0
        mags = np.zeros(c * (h * w - 4))
        lo, hi = mu - 1.0 / 255, mu + 1.0 / 255
        fscale = 1.0
    else:
        spatial = w1_sorted(flat, np.tile(gaussian_quantiles(h * w, mu, sd), (c, 1)))
        mag = magnitude(dft2_channelwise(NoiseField.from_chw(noise)), exclude_special_bins=True).values
        fscale = gaussian_spectrum_scale(sd, h, w)
        freq = w1_sorted(mag, np.tile(rayleigh_quantiles(mag.shape[1], fscale), (c, 1)))
        mags = mag.ravel()
        lo, hi = mu - 4 * sd, mu + 4 * sd
    return NoiseReport(
        mu_hat=mu, sigma_hat=sd, spatial_w1=float(spatial), freq_w1=float(freq),
        lag1_h=_lag1(noise, 2), lag1_v=_lag1(noise, 1),
        signal_slope=_signal_slope(noise, np.asarray(clean, dtype=np.float64)),
        no_noise=no_noise,
        spatial_hist=histogram(flat, HIST_BINS, lo, hi),
        freq_hist=histogram(mags, HIST_BINS, 0.0, 4.0 * fscale),
    )


def analyze_noise(noisy: np.ndarray, clean: np.ndarray, translator: Optional[Translator] = None,
                  prng: Optional[Prng] = None) -> List[NoiseReport]:
    """Report for the input noise and, when a translator is given, for the translated noise."""
    noisy = np.asarray(noisy, dtype=np.float64)
    clean = np.asarray(clean, dtype=np.float64)
    if noisy.shape != clean.shape:
        raise ShapeError(f"analyze_noise: shape mismatch {noisy.shape} vs {clean.shape}")
    reports = [noise_report(noisy - clean, clean)]
    if translator is not None:
        x = _batch(noisy)
        xp, (h, w) = pad_reflect(x, 2 ** translator.depth)
        i_t = translator(Tensor(xp), prng or Prng(0)).data[0, :, :h, :w]
        reports.append(noise_report(i_t - clean, clean))
    return reports


def json_safe(value):
    """Replace non-finite floats by the strings "inf" / "-inf" / "nan"."""
    if isinstance(value, dict):
        return {k: json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_safe(v) for v in value]
    if isinstance(value, float) and not math.isfinite(value):
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    return value
