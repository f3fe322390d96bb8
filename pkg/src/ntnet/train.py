"""Denoiser pretraining and translator training loops."""
from __future__ import annotations

import json
import logging
from typing import List, Optional, Sequence

import numpy as np

from .checkpoint import params_digest
from .config import TrainConfig
from .data import make_batch, stack_pairs
from .losses import (LossBreakdown, gaussian_reference_batch, loss_freq, loss_implicit,
                     loss_spatial, loss_total)
from .nets import AdamW, Denoiser, Translator, cosine_lr
from .rand import Prng
from .tensor import NonFiniteError, Tensor, backward, l1_mean, scale, sub

log = logging.getLogger(__name__)

# sub-stream ids under Prng(config.seed)
STREAM_DENOISER_INIT = 1
STREAM_PRETRAIN_BATCH = 2
STREAM_TRANSLATOR_INIT = 3
STREAM_TRANSLATOR_BATCH = 4
STREAM_INJECTION = 5
STREAM_REFERENCE = 6
STREAM_EVAL = 7


class TrainingDiverged(RuntimeError):
    pass


def build_denoiser(config: TrainConfig, channels: int = 3) -> Denoiser:
    return Denoiser(Prng(config.seed).split(STREAM_DENOISER_INIT), channels,
                    config.denoiser_width, config.denoiser_depth)


def build_translator(config: TrainConfig, channels: int = 3) -> Translator:
    return Translator(Prng(config.seed).split(STREAM_TRANSLATOR_INIT), channels,
                      config.translator_width, config.translator_depth, config.sigma_tilde)


class _JsonLog:
    def __init__(self, path):
        self.fh = open(path, "w") if path else None

    def write(self, record: dict) -> None:
        if self.fh:
            self.fh.write(json.dumps(record, sort_keys=True) + "\n")

    def close(self) -> None:
        if self.fh:
            self.fh.close()


def pretrain_denoiser(config: TrainConfig, corpus: Sequence[np.ndarray], log_path=None):
    """Train the Gaussian denoiser with L1 loss. Returns ``(model, loss_history)``."""
    config.validate()
    root = Prng(config.seed)
    model = build_denoiser(config, corpus[0].shape[0]).unfreeze()
    opt = AdamW(model.parameters(), lr=config.denoiser_lr_init, weight_decay=config.weight_decay)
    iters = config.denoiser_iters
    history: List[float] = []
    jl = _JsonLog(log_path)
    try:
        for step in range(iters):
            lr = cosine_lr(step, iters, config.denoiser_lr_init, config.denoiser_lr_final)
            noisy, clean = stack_pairs(make_batch(root.split(STREAM_PRETRAIN_BATCH, step), config,
                                                  corpus, "denoiser-pretrain"))
            try:
                loss = l1_mean(model(Tensor(noisy)), clean)
            except NonFiniteError as exc:
                raise TrainingDiverged(f"denoiser pretraining diverged at iteration {step} (lr={lr:.3e}): "
                                       f"{exc}; recent losses {history[-5:]}") from None
            opt.zero_grad()
            backward(loss)
            opt.step(lr)
            value = float(loss.data)
            history.append(value)
            jl.write({"iteration": step, "lr": lr, "loss": value})
            if config.log_every and step % config.log_every == 0:
                log.info("pretrain %d/%d loss %.5f lr %.2e", step, iters, value, lr)
    finally:
        jl.close()
    return model.freeze(), history


def translator_step_loss(translator: Translator, denoiser: Denoiser, noisy: np.ndarray, clean: np.ndarray,
                         inject: Prng, ref: Prng, alpha: float, beta: float):
    """Forward pass of one translator step: returns ``(total node, LossBreakdown)``."""
    stage = "translator"
    try:
        i_t = translator(Tensor(noisy), inject)
        n_t = sub(i_t, clean)
        n_g = gaussian_reference_batch(ref, n_t.data)
        stage = "l_implicit"
        implicit = loss_implicit(denoiser(i_t), clean)
        stage = "l_spatial"
        spatial = loss_spatial(n_t, n_g)
        stage = "l_freq"
        freq = loss_freq(n_t, n_g)
    except NonFiniteError as exc:
        raise TrainingDiverged(f"non-finite {stage}: {exc}") from None
    explicit = spatial + scale(freq, beta)
    return loss_total(implicit, explicit, alpha, spatial, freq, beta)


def train_translator(config: TrainConfig, denoiser: Denoiser, corpus: Sequence[np.ndarray], log_path=None):
    """Optimize the translator against the frozen denoiser.

    Returns ``(translator, breakdown_history)``; raises if the denoiser changed.
    """
    config.validate()
    root = Prng(config.seed)
    denoiser.freeze()
    digest = params_digest(denoiser)
    translator = build_translator(config, corpus[0].shape[0]).unfreeze()
    opt = AdamW(translator.parameters(), lr=config.translator_lr_init, weight_decay=config.weight_decay)
    iters = config.translator_iters
    history: List[LossBreakdown] = []
    jl = _JsonLog(log_path)
    try:
        for step in range(iters):
            lr = cosine_lr(step, iters, config.translator_lr_init, config.translator_lr_final)
            noisy, clean = stack_pairs(make_batch(root.split(STREAM_TRANSLATOR_BATCH, step), config,
                                                  corpus, "translator-train"))
            try:
                total, bd = translator_step_loss(translator, denoiser, noisy, clean,
                                                 root.split(STREAM_INJECTION, step),
                                                 root.split(STREAM_REFERENCE, step), config.alpha, config.beta)
            except TrainingDiverged as exc:
                tail = [h.l_total for h in history[-5:]]
                raise TrainingDiverged(f"translator training diverged at iteration {step} (lr={lr:.3e}): "
                                       f"{exc}; recent totals {tail}") from None
            opt.zero_grad()
            backward(total)
            opt.step(lr)
            history.append(bd)
            jl.write(json.loads(bd.to_json(iteration=step, lr=lr)))
            if config.log_every and step % config.log_every == 0:
                log.info("translator %d/%d total %.5f implicit %.5f spatial %.5f freq %.4f", step, iters,
                         bd.l_total, bd.l_implicit, bd.l_spatial, bd.l_freq)
    finally:
        jl.close()
    if params_digest(denoiser) != digest:
        raise RuntimeError("frozen denoiser parameters changed during translator training")
    return translator, history
