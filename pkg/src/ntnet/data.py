"""Clean-image corpora, synthetic "real" noise and training batches."""
from __future__ import annotations

import os
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .config import TrainConfig
from .imageio import ImageFormatError, list_images, load_image
from .rand import Prng, synth_correlated, synth_signal_dependent

LEVEL = 255.0

GAUSSIAN = "synthetic-gaussian"
CORRELATED = "synthetic-correlated"
SIGNAL_DEPENDENT = "synthetic-signal-dependent"
EXTERNAL = "external-pair"

# counts input-side Gaussian augmentations; inference paths must leave it untouched
AUGMENTATION_CALLS = 0


@dataclass
class ImagePair:
    clean: np.ndarray
    noisy: np.ndarray
    tag: str

    def __post_init__(self):
        if self.clean.shape != self.noisy.shape:
            raise ValueError(f"ImagePair: shapes differ, {self.clean.shape} vs {self.noisy.shape}")


def stack_pairs(pairs: Sequence[ImagePair], dtype=np.float32) -> Tuple[np.ndarray, np.ndarray]:
    noisy = np.stack([p.noisy for p in pairs]).astype(dtype)
    clean = np.stack([p.clean for p in pairs]).astype(dtype)
    return noisy, clean


# ---------------------------------------------------------------------------
# corpora
# ---------------------------------------------------------------------------


def load_corpus(path) -> List[np.ndarray]:
    """All P5/P6 images in ``path`` (lexicographic order) as (C, H, W) arrays in [0, 1]."""
    if not os.path.isdir(path):
        raise FileNotFoundError(f"corpus directory not found: {path}")
    files = list_images(path)
    if not files:
        raise ValueError(f"no .pgm/.ppm images in {path}")
    images = []
    for f in files:
        try:
            images.append(load_image(f))
        except OSError as exc:
            raise ImageFormatError(f"{f}: unreadable ({exc})") from None
    return images


def synth_clean_image(prng: Prng, size: int, channels: int = 3) -> np.ndarray:
    """Procedural piecewise-smooth scene: gradient background, shapes, a striped patch."""
    yy, xx = np.mgrid[0:size, 0:size] / float(size)

    def colour():
        return prng.uniform((channels,), 0.12, 0.88)

    c0, c1 = colour(), colour()
    angle = prng.uniform((), 0.0, 2 * np.pi)
    t = (np.cos(angle) * xx + np.sin(angle) * yy)
    t = (t - t.min()) / max(t.max() - t.min(), 1e-9)
    img = c0[:, None, None] * (1 - t) + c1[:, None, None] * t

    for _ in range(prng.integers(5, 11)):
        cx, cy = prng.uniform((2,), 0.0, 1.0)
        rx, ry = prng.uniform((2,), 0.05, 0.3)
        kind = prng.integers(0, 3)
        if kind == 0:
            mask = (np.abs(xx - cx) < rx) & (np.abs(yy - cy) < ry)
        elif kind == 1:
            mask = ((xx - cx) / rx) ** 2 + ((yy - cy) / ry) ** 2 < 1.0
        else:
            a = prng.uniform((), 0.0, 2 * np.pi)
            u = np.cos(a) * (xx - cx) + np.sin(a) * (yy - cy)
            v = -np.sin(a) * (xx - cx) + np.cos(a) * (yy - cy)
            mask = (np.abs(u) < rx) & (np.abs(v) < ry * 0.4)
        shade = 1.0 + 0.15 * (xx - cx) * prng.uniform((), -1.0, 1.0)
        img = np.where(mask[None], colour()[:, None, None] * shade[None], img)

    if prng.coin():
        freq = prng.uniform((), 6.0, 16.0)
        a = prng.uniform((), 0.0, np.pi)
        stripes = 0.08 * np.sin(2 * np.pi * freq * (np.cos(a) * xx + np.sin(a) * yy))
        cx, cy = prng.uniform((2,), 0.2, 0.8)
        region = (np.abs(xx - cx) < 0.25) & (np.abs(yy - cy) < 0.25)
        img = img + (stripes * region)[None]
    return np.clip(img, 0.0, 1.0)


def synth_corpus(prng: Prng, count: int, size: int, channels: int = 3) -> List[np.ndarray]:
    return [synth_clean_image(prng.split(i), size, channels) for i in range(count)]


def resolve_corpus(config: TrainConfig, test: bool = False) -> List[np.ndarray]:
    path = config.test_corpus if test else config.corpus
    if path:
        return load_corpus(path)
    # disjoint seed streams for train and test scenes
    root = Prng(config.seed).split(900 + int(test))
    count = config.synth_test_images if test else config.synth_train_images
    return synth_corpus(root, count, config.synth_image_size)


# ---------------------------------------------------------------------------
# noise
# ---------------------------------------------------------------------------


def add_gaussian_level(prng: Prng, image: np.ndarray, level: float) -> np.ndarray:
    """``image`` + N(0, (level/255)^2); counted as an input augmentation."""
    global AUGMENTATION_CALLS
    AUGMENTATION_CALLS += 1
    if level == 0:
        return image.copy()
    return image + prng.normal(image.shape, 0.0, level / LEVEL)


def real_noise(prng: Prng, clean: np.ndarray, config: TrainConfig) -> Tuple[np.ndarray, str]:
    """Stand-in "real" noise for a (C, H, W) clean image: correlated or signal-dependent."""
    family = config.noise_family
    if family == "mixture":
        family = "correlated" if prng.coin() else "signal-dependent"
    c, h, w = clean.shape
    if family == "correlated":
        sigma = prng.uniform((), config.corr_sigma_lo, config.corr_sigma_hi) / LEVEL
        field = synth_correlated(prng, (h, w, c), float(sigma))
        return field.to_chw(), CORRELATED
    field = synth_signal_dependent(prng, clean.transpose(1, 2, 0), config.sd_a, (config.sd_b_level / LEVEL) ** 2)
    return field.to_chw(), SIGNAL_DEPENDENT


def random_crop(prng: Prng, image: np.ndarray, size: int) -> np.ndarray:
    c, h, w = image.shape
    if h < size or w < size:
        raise ValueError(f"crop {size} larger than image {h}x{w}")
    y = prng.integers(0, h - size + 1)
    x = prng.integers(0, w - size + 1)
    return image[:, y:y + size, x:x + size]


PHASES = ("denoiser-pretrain", "translator-train")


def make_batch(prng: Prng, config: TrainConfig, corpus: Sequence[np.ndarray], phase: str) -> List[ImagePair]:
    """One training batch.

    denoiser-pretrain: the first ceil(N/2) items are clean + Gaussian(pretrain_sigma),
    the rest are "real"-noisy crops further corrupted by the same Gaussian.
    translator-train: "real"-noisy crops plus Gaussian at a uniform level in
    [aug_lo, aug_hi]; the target is the clean crop.
    """
    if not corpus:
        raise ValueError("make_batch: empty corpus")
    if phase not in PHASES:
        raise ValueError(f"make_batch: unknown phase {phase!r}")
    size = config.crop_size
    if all(img.shape[1] < size or img.shape[2] < size for img in corpus):
        raise ValueError(f"make_batch: crop {size} larger than every corpus image")
    eligible = [img for img in corpus if img.shape[1] >= size and img.shape[2] >= size]
    n = config.batch_size
    n_gauss = (n + 1) // 2 if phase == "denoiser-pretrain" else 0
    pairs = []
    for i in range(n):
        p = prng.split(i)
        clean = random_crop(p, eligible[p.integers(0, len(eligible))], size)
        if i < n_gauss:
            noisy = add_gaussian_level(p, clean, config.pretrain_sigma)
            tag = GAUSSIAN
        else:
            noise, tag = real_noise(p, clean, config)
            if phase == "denoiser-pretrain":
                level = config.pretrain_sigma
            else:
                level = float(p.uniform((), config.aug_lo, config.aug_hi))
            noisy = add_gaussian_level(p, clean + noise, level)
        pairs.append(ImagePair(clean, np.clip(noisy, 0.0, 1.0), tag))
    return pairs


def make_test_pairs(prng: Prng, corpus: Sequence[np.ndarray], sigma_level: float,
                    family: str = "correlated", size: int = 64) -> List[ImagePair]:
    """Held-out noisy/clean pairs: one centre crop per image with the given noise family."""
    pairs = []
    for i, img in enumerate(corpus):
        c, h, w = img.shape
        y, x = (h - size) // 2, (w - size) // 2
        clean = img[:, y:y + size, x:x + size]
        p = prng.split(i)
        if family == "correlated":
            noise = synth_correlated(p, (size, size, c), sigma_level / LEVEL).to_chw()
            tag = CORRELATED
        elif family == "gaussian":
            noise = p.normal(clean.shape, 0.0, sigma_level / LEVEL)
            tag = GAUSSIAN
        else:
            raise ValueError(f"unknown test noise family {family!r}")
        pairs.append(ImagePair(clean, np.clip(clean + noise, 0.0, 1.0), tag))
    return pairs
