import json

import numpy as np
import pytest

from ntnet.gradcheck import gradcheck
from ntnet.losses import (DEFAULT_ALPHA, DEFAULT_BETA, LossBreakdown, gaussian_reference,
                          gaussian_reference_batch, loss_explicit, loss_freq, loss_implicit, loss_spatial,
                          loss_total, translation_objective)
from ntnet.nets import Translator
from ntnet.rand import NoiseField, Prng, sample_gaussian, synth_correlated
from ntnet.tensor import ShapeError, Tensor, backward, sub


def field(seed, shape=(1, 1, 4, 4), scale=1.0):
    return np.random.default_rng(seed).standard_normal(shape) * scale


def T(a, grad=True):
    return Tensor(np.array(a, dtype=np.float64), requires_grad=grad)


def test_defaults():
    assert DEFAULT_ALPHA == 5e-2 and DEFAULT_BETA == 2e-3


def test_gaussian_reference():
    const = gaussian_reference(Prng(0), np.full((4, 4, 1), 0.2))
    assert np.all(const.values == 0.2)
    nt = NoiseField(sample_gaussian(Prng(1), (64, 64, 3), 0.05, 0.1).values)
    ref = gaussian_reference(Prng(2), nt)
    n = ref.values.size
    assert abs(ref.mu_hat - nt.mu_hat) < 4 * nt.sigma_hat / np.sqrt(n)
    assert abs(ref.sigma_hat / nt.sigma_hat - 1) < 0.03
    np.testing.assert_array_equal(ref.values, gaussian_reference(Prng(2), nt).values)
    batch = np.stack([np.full((3, 4, 4), 0.1), field(3, (3, 4, 4))])
    rb = gaussian_reference_batch(Prng(4), batch)
    assert rb.shape == batch.shape
    np.testing.assert_allclose(rb[0], 0.1, rtol=0, atol=1e-15)


def test_loss_implicit():
    x = field(0)
    assert loss_implicit(T(x), x).item() == 0.0
    assert loss_implicit(T(x + 0.3), x).item() == pytest.approx(0.3)
    with pytest.raises(ShapeError):
        loss_implicit(T(x), x[..., :2])
    # identity denoiser: gradient sign(I_T - gt)/N
    it, gt = T(field(1)), field(2)
    backward(loss_implicit(it, gt))
    np.testing.assert_allclose(it.grad, np.sign(it.data - gt) / gt.size)
    assert gradcheck(lambda t: loss_implicit(t, gt), T(field(1))).passed


def test_loss_spatial():
    ng = field(3)
    perm = np.random.default_rng(0).permutation(16)
    assert loss_spatial(T(ng.reshape(-1)[perm].reshape(ng.shape)), ng).item() == 0.0
    nt = T(ng + 0.25)
    loss = loss_spatial(nt, ng)
    assert loss.item() == pytest.approx(0.25)
    backward(loss)
    np.testing.assert_allclose(nt.grad, 1 / 16)
    rep = gradcheck(lambda t: loss_spatial(t, ng), T(field(4)))
    assert rep.passed and rep.max_rel_err < 1e-4, rep
    with pytest.raises(ShapeError):
        loss_spatial(T(field(0)), field(0, (1, 1, 4, 2)))


def test_loss_freq():
    ng = field(5)
    assert loss_freq(T(ng), ng).item() == 0.0
    assert loss_freq(T(-ng), ng).item() == pytest.approx(0.0, abs=1e-14)
    rep = gradcheck(lambda t: loss_freq(t, ng), T(field(6)), tol=1e-3)
    assert rep.passed, rep
    nf = NoiseField(ng[0].transpose(1, 2, 0))
    assert loss_freq(T(ng), nf).item() == 0.0


def test_loss_explicit_and_total_composition():
    nt, ng = T(field(7, (2, 3, 8, 8))), field(8, (2, 3, 8, 8))
    assert loss_explicit(nt, ng, beta=0.0).item() == loss_spatial(nt, ng).item()
    with pytest.raises(ValueError):
        loss_explicit(nt, ng, beta=-1)
    implicit = loss_implicit(T(field(9, (2, 3, 8, 8))), field(10, (2, 3, 8, 8)))
    explicit, sp, fr = loss_explicit(nt, ng, parts=True)
    total, bd = loss_total(implicit, explicit, DEFAULT_ALPHA, sp, fr, DEFAULT_BETA)
    assert bd.l_explicit == bd.l_spatial + bd.beta * bd.l_freq
    assert bd.l_total == bd.l_implicit + bd.alpha * bd.l_explicit
    assert total.item() == pytest.approx(bd.l_total, rel=1e-14)
    total0, bd0 = loss_total(implicit, explicit, 0.0, sp, fr)
    assert total0.item() == implicit.item() and bd0.l_total == bd0.l_implicit
    with pytest.raises(ValueError):
        loss_total(implicit, explicit, -0.1)
    rec = json.loads(bd.to_json(iteration=3))
    assert rec["iteration"] == 3 and set(rec) >= {"l_implicit", "l_spatial", "l_freq", "l_explicit", "l_total"}
    assert bd.is_finite() and LossBreakdown.compose(1, float("nan"), 0, 1, 1).non_finite_components()


def test_total_gradcheck_tiny_translator():
    tr = Translator(Prng(0), channels=1, width=2, depth=1, sigma_tilde=0.0, blocks=1, middle_blocks=1,
                    dtype=np.float64)
    rng = np.random.default_rng(1)
    for p in tr.parameters():
        p.data = p.data + 0.2 * rng.standard_normal(p.shape)
    noisy, clean = field(11, (1, 1, 4, 4)), field(12, (1, 1, 4, 4))
    ng = field(13, (1, 1, 4, 4))
    params = tr.parameters()

    def f(*ps):
        it = tr(Tensor(noisy))
        total, _ = translation_objective(it, clean, sub(it, clean), ng, alpha=0.5, beta=0.1)
        return total

    rep = gradcheck(f, params, tol=1e-3)
    assert rep.passed, rep


def test_discrimination_correlated_vs_white():
    corr, white = [], []
    sigma = 15 / 255
    for t in range(50):
        c = synth_correlated(Prng(30, (t,)), (64, 64, 3), sigma)
        w = sample_gaussian(Prng(31, (t,)), (64, 64, 3), 0.0, sigma)
        for field_, out in ((c, corr), (w, white)):
            ref = gaussian_reference(Prng(32, (t,)), field_)
            out.append(loss_explicit(Tensor(field_.to_chw()[None]), ref).item())
    assert np.mean(corr) > 2 * np.mean(white)


def test_gradients_finite_near_zero():
    nt = T(np.zeros((1, 2, 4, 4)))
    nt.data[0, 0, 0, 0] = 1e-300
    total = loss_explicit(nt, np.zeros((1, 2, 4, 4)))
    backward(total)
    assert np.isfinite(nt.grad).all() and total.item() >= 0
