"""End-to-end desk-scale experiment: pretrain, translate-train, evaluate, analyze."""
from __future__ import annotations

import json
import os
import time
from typing import Optional

import numpy as np

from .checkpoint import ModelCheckpoint, build_model, from_model, params_digest
from .config import TrainConfig
from .data import make_test_pairs, resolve_corpus
from .nets import Denoiser, Translator, count_params
from .pipeline import ablate_gaussian_addition, analyze_noise, json_safe
from .rand import Prng
from .train import STREAM_EVAL, pretrain_denoiser, train_translator

ABLATION_LEVELS = (0, 5, 10, 15)


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(json_safe(obj), fh, sort_keys=True, indent=2)
        fh.write("\n")


def test_pairs(config: TrainConfig, family: str = "correlated"):
    corpus = resolve_corpus(config, test=True)
    return make_test_pairs(Prng(config.seed).split(STREAM_EVAL), corpus, config.test_corr_sigma, family,
                           size=config.crop_size)


def noise_summary(pairs, translator: Translator, prng: Prng) -> dict:
    """Mean input vs translated noise diagnostics over ``pairs``."""
    before, after = [], []
    for i, p in enumerate(pairs):
        rin, rout = analyze_noise(p.noisy, p.clean, translator, prng.split(i))
        before.append(rin.summary())
        after.append(rout.summary())
    keys = ("sigma_hat", "spatial_w1", "freq_w1", "lag1_h", "lag1_v")
    return {"input": {k: float(np.mean([r[k] for r in before])) for k in keys},
            "translated": {k: float(np.mean([r[k] for r in after])) for k in keys}}


def evaluate_models(config: TrainConfig, denoiser: Denoiser, translator: Translator) -> dict:
    pairs = test_pairs(config)
    root = Prng(config.seed).split(STREAM_EVAL)
    table = ablate_gaussian_addition(pairs, denoiser, ABLATION_LEVELS, translator, root.split(1))
    return {"ablation": table, "noise": noise_summary(pairs, translator, root.split(2)),
            "test_images": len(pairs), "test_noise": {"family": "correlated", "sigma": config.test_corr_sigma}}


def run_experiment(config: TrainConfig, out_dir: str, denoiser_ckpt: Optional[str] = None) -> dict:
    """Run the whole pipeline and write checkpoints, logs and ``metrics.json`` to ``out_dir``.

    Wall-clock timings go to ``timings.json`` so that ``metrics.json`` depends
    only on the config.
    """
    config.validate()
    os.makedirs(out_dir, exist_ok=True)
    write_json(os.path.join(out_dir, "config.json"), config.to_dict())
    t0 = time.perf_counter()
    corpus = resolve_corpus(config)
    if denoiser_ckpt:
        denoiser = build_model(ModelCheckpoint.load(denoiser_ckpt)).freeze()
        pre_hist = []
    else:
        denoiser, pre_hist = pretrain_denoiser(config, corpus, os.path.join(out_dir, "pretrain_log.jsonl"))
        from_model(denoiser, "denoiser", config.to_dict(), config.denoiser_iters).save(
            os.path.join(out_dir, "denoiser.ntnt"))
    t1 = time.perf_counter()
    digest = params_digest(denoiser)
    translator, tr_hist = train_translator(config, denoiser, corpus, os.path.join(out_dir, "translator_log.jsonl"))
    from_model(translator, "translator", config.to_dict(), config.translator_iters).save(
        os.path.join(out_dir, "translator.ntnt"))
    t2 = time.perf_counter()
    results = evaluate_models(config, denoiser, translator)
    t3 = time.perf_counter()

    def window(values, head: bool):
        k = min(50, len(values))
        return float(np.mean(values[:k] if head else values[-k:])) if values else None

    totals = [b.l_total for b in tr_hist]
    metrics = {
        "params": {"translator": count_params(translator), "denoiser": count_params(denoiser)},
        "pretrain": {"iterations": len(pre_hist), "loss_start": window(pre_hist, True),
                     "loss_end": window(pre_hist, False)},
        "translator": {"iterations": len(tr_hist), "total_start": window(totals, True),
                       "total_end": window(totals, False)},
        "denoiser_digest_unchanged": params_digest(denoiser) == digest,
        **results,
    }
    write_json(os.path.join(out_dir, "metrics.json"), metrics)
    write_json(os.path.join(out_dir, "timings.json"),
               {"pretrain_s": t1 - t0, "translator_s": t2 - t1, "eval_s": t3 - t2, "total_s": t3 - t0})
    return metrics
