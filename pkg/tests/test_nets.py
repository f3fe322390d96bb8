import math

import numpy as np
import pytest

from ntnet.gradcheck import gradcheck
from ntnet.nets import (AdamW, Conv, Denoiser, GIBlock, Translator, count_params, cosine_lr,
                        inject_gaussian)
from ntnet.rand import Prng
from ntnet.tensor import ShapeError, Tensor, backward, l1_mean, mul, tsum


def img(shape=(2, 3, 16, 16), seed=0):
    return Tensor(np.random.default_rng(seed).uniform(size=shape).astype(np.float32))


def test_giblock_identity_when_uninjected():
    x = img((1, 4, 8, 8))
    blk = GIBlock(4, Prng(0), sigma_tilde=0.0)
    np.testing.assert_array_equal(blk(x).data, x.data)
    with pytest.raises(ShapeError):
        blk(img((1, 3, 8, 8)))


def test_injection_variance():
    x = Tensor(np.random.default_rng(0).standard_normal((1, 10, 100, 100)) * 0.3)
    y = inject_gaussian(x, 100.0, Prng(1))
    extra = y.data.var() - x.data.var()
    assert abs(extra / (100 / 255) ** 2 - 1) < 0.05
    with pytest.raises(ValueError):
        inject_gaussian(x, 100.0, None)


def test_injection_stochasticity():
    tr = Translator(Prng(0))
    for p in tr.parameters():
        p.data = p.data + np.float32(0.05)
    x = img((1, 3, 8, 8))
    a, b, c = tr(x, Prng(1)).data, tr(x, Prng(1)).data, tr(x, Prng(2)).data
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_translator_identity_at_init():
    tr = Translator(Prng(5))
    for x in (img(), Tensor(np.zeros((1, 3, 8, 8), np.float32)), Tensor(np.ones((1, 3, 4, 12), np.float32))):
        out = tr(x, Prng(9))
        assert out.data.tobytes() == x.data.tobytes()
    with pytest.raises(ShapeError):
        tr(img((1, 3, 6, 8)), Prng(0))


def test_shape_preservation_and_finite_extremes():
    tr, den = Translator(Prng(0)), Denoiser(Prng(1))
    for p in list(tr.parameters()) + list(den.parameters()):
        p.data = p.data + np.float32(0.01)
    for shape in ((1, 3, 16, 16), (2, 3, 32, 48)):
        for v in (0.0, 1.0):
            x = Tensor(np.full(shape, v, np.float32))
            assert tr(x, Prng(0)).shape == shape
            assert np.isfinite(den(x).data).all() and den(x).shape == shape


def test_denoiser_zero_residual_and_determinism():
    den = Denoiser(Prng(3))
    x = img((1, 3, 16, 16))
    np.testing.assert_array_equal(den(x).data, x.data)
    for p in den.parameters():
        p.data = p.data + np.float32(0.01)
    assert den(x).data.tobytes() == den(x).data.tobytes()
    with pytest.raises(ShapeError):
        den(img((1, 1, 16, 16)))


def test_denoiser_gradcheck_tiny():
    den = Denoiser(Prng(0), channels=1, width=4, depth=1, blocks=1, middle_blocks=0, dtype=np.float64)
    rng = np.random.default_rng(0)
    for p in den.parameters():
        p.data = p.data + 0.2 * rng.standard_normal(p.shape)
    x = Tensor(rng.standard_normal((1, 1, 4, 4)))
    probe = Tensor(rng.standard_normal((1, 1, 4, 4)))
    rep = gradcheck(lambda *ps: tsum(mul(den(x), probe)), den.parameters())
    assert rep.passed, rep


def test_param_counts():
    assert count_params(Conv(1, 1, 3, Prng(0))) == 10
    assert count_params([]) == 0
    ratio = count_params(Translator(Prng(0))) / count_params(Denoiser(Prng(0)))
    assert ratio < 0.05


def test_freeze_allocates_no_grads():
    den = Denoiser(Prng(0), width=4, depth=1)
    den.freeze()
    x = img((1, 3, 8, 8))
    x.requires_grad = True
    backward(l1_mean(den(x), np.zeros((1, 3, 8, 8), np.float32)))
    assert all(p.grad is None for p in den.parameters())
    assert x.grad is not None


def test_adamw_hand_step():
    p = Tensor(np.array([1.0]), requires_grad=True)
    opt = AdamW([p], lr=1e-3)
    p.grad = np.array([1.0])
    opt.step()
    assert p.data[0] == pytest.approx(0.999, abs=1e-9)
    q = Tensor(np.array([2.0, -3.0]), requires_grad=True)
    opt = AdamW([q], lr=1e-3)
    q.grad = np.zeros(2)
    opt.step()
    np.testing.assert_array_equal(q.data, [2.0, -3.0])
    opt = AdamW([q], lr=1e-2, weight_decay=0.5)
    opt.step()
    np.testing.assert_allclose(q.data, np.array([2.0, -3.0]) * (1 - 1e-2 * 0.5))


def test_cosine_lr():
    assert cosine_lr(0, 1000, 1e-3, 1e-5) == 1e-3
    assert cosine_lr(1000, 1000, 1e-3, 1e-5) == pytest.approx(1e-5)
    assert cosine_lr(2000, 2000, 1e-3, 1e-7) == pytest.approx(1e-7)
    assert cosine_lr(500, 1000, 1e-3, 1e-5) == pytest.approx(5.05e-4)
    with pytest.raises(ValueError):
        cosine_lr(1001, 1000, 1e-3, 1e-5)
    with pytest.raises(ValueError):
        cosine_lr(-1, 1000, 1e-3, 1e-5)
