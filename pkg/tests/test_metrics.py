import math

import numpy as np
import pytest
from skimage.metrics import structural_similarity

from ntnet.metrics import psnr, ssim


def test_psnr_exact_cases():
    a = np.random.default_rng(0).uniform(size=(3, 16, 16))
    assert psnr(a, a) == math.inf
    assert psnr(np.zeros((1, 4, 4)), np.ones((1, 4, 4))) == 0.0
    assert psnr(np.zeros((1, 4, 4)), np.full((1, 4, 4), 16 / 255)) == pytest.approx(20 * math.log10(255 / 16))
    # direct evaluation gives 24.04840 (the commonly quoted 24.0472 is a rounding slip)
    assert psnr(np.zeros((1, 4, 4)), np.full((1, 4, 4), 16 / 255)) == pytest.approx(24.048404, abs=1e-6)
    with pytest.raises(ValueError):
        psnr(np.zeros((1, 4, 4)), np.zeros((1, 4, 5)))


def test_ssim_identity_and_errors():
    a = np.random.default_rng(1).uniform(size=(3, 16, 16))
    assert ssim(a, a) == 1.0
    with pytest.raises(ValueError):
        ssim(np.zeros((1, 10, 16)), np.zeros((1, 10, 16)))
    with pytest.raises(ValueError):
        ssim(np.zeros((1, 16, 16)), np.zeros((1, 16, 17)))


def test_ssim_inverted_binary_image():
    a = (np.random.default_rng(2).uniform(size=(1, 32, 32)) > 0.5).astype(float)
    assert ssim(a, 1 - a) < 0.2


def test_ssim_monotone_in_noise():
    rng = np.random.default_rng(3)
    a = np.clip(np.linspace(0, 1, 48)[None, None, :] + np.zeros((3, 48, 48)), 0, 1)
    vals = [ssim(a, a + rng.standard_normal(a.shape) * s / 255) for s in (5, 15, 25)]
    assert vals[0] > vals[1] > vals[2]


def test_ssim_matches_reference_implementation():
    rng = np.random.default_rng(4)
    a = rng.uniform(size=(3, 24, 20))
    b = np.clip(a + 0.1 * rng.standard_normal(a.shape), 0, 1)
    ref = np.mean([structural_similarity(a[c], b[c], gaussian_weights=True, sigma=1.5,
                                         use_sample_covariance=False, data_range=1.0, full=True)[1][5:-5, 5:-5].mean()
                   for c in range(3)])
    assert ssim(a, b) == pytest.approx(ref, abs=1e-12)
