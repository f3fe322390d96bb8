"""Command-line interface.

Every command accepts ``--config <json>``, ``--seed``, ``--out <dir>`` and an
override flag for each training-config field. Errors are reported as a JSON
object on stderr with a non-zero exit status.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
import typing

import numpy as np

from . import data as data_mod
from .checkpoint import ModelCheckpoint, build_model, from_model
from .config import TrainConfig
from .data import ImagePair, load_corpus, real_noise, resolve_corpus
from .experiment import ABLATION_LEVELS, run_experiment, test_pairs, write_json
from .imageio import image_extension, list_images, load_image, save_image
from .pipeline import ablate_gaussian_addition, analyze_noise, denoise_pipeline, evaluate, run_denoiser
from .rand import Prng
from .train import STREAM_EVAL, pretrain_denoiser, train_translator


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _emit_error("UsageError", message)
        sys.exit(2)


def _emit_error(kind: str, message: str) -> None:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")


def _field_type(f: dataclasses.Field):
    t = f.type if not isinstance(f.type, str) else eval(f.type, vars(typing))  # noqa: S307
    if typing.get_origin(t) is typing.Union:
        t = next(a for a in typing.get_args(t) if a is not type(None))
    return t


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with TrainConfig fields")
    p.add_argument("--out", default="out", help="output directory")
    for f in dataclasses.fields(TrainConfig):
        flag = "--" + f.name.replace("_", "-")
        p.add_argument(flag, dest=f.name, type=_field_type(f), default=None,
                       help=f"override {f.name} (default {f.default!r})")


def _config(args) -> TrainConfig:
    cfg = TrainConfig.from_json_file(args.config) if args.config else TrainConfig()
    overrides = {f.name: getattr(args, f.name) for f in dataclasses.fields(TrainConfig)}
    return cfg.replace(**overrides)


def _load(path, kind):
    if not path:
        raise CliError(f"--{kind} checkpoint path is required")
    ckpt = ModelCheckpoint.load(path)
    if ckpt.kind != kind:
        raise CliError(f"{path} holds a {ckpt.kind} checkpoint, expected {kind}")
    return build_model(ckpt).freeze()


def _external_pairs(clean_dir, noisy_dir):
    clean = load_corpus(clean_dir)
    noisy = load_corpus(noisy_dir)
    if len(clean) != len(noisy):
        raise CliError(f"{clean_dir} and {noisy_dir} hold different image counts")
    return [ImagePair(c, n, data_mod.EXTERNAL) for c, n in zip(clean, noisy)]


def cmd_synth(args, cfg):
    root = Prng(cfg.seed)
    clean_dir = os.path.join(args.out, "clean")
    noisy_dir = os.path.join(args.out, "noisy")
    os.makedirs(clean_dir, exist_ok=True)
    os.makedirs(noisy_dir, exist_ok=True)
    images = data_mod.synth_corpus(root.split(900), args.count, cfg.synth_image_size, args.channels)
    manifest = []
    for i, img in enumerate(images):
        p = root.split(901, i)
        if args.noise == "gaussian":
            level = 15.0 if args.level is None else args.level
            noisy, tag = data_mod.add_gaussian_level(p, img, level), data_mod.GAUSSIAN
        elif args.noise == "correlated" and args.level is not None:
            noisy = img + data_mod.synth_correlated(p, img.shape[1:] + (img.shape[0],), args.level / 255).to_chw()
            tag = data_mod.CORRELATED
        else:
            noise, tag = real_noise(p, img, cfg.replace(noise_family=args.noise))
            noisy = img + noise
        name = f"{i:04d}{image_extension(img.shape[0])}"
        save_image(os.path.join(clean_dir, name), img)
        save_image(os.path.join(noisy_dir, name), np.clip(noisy, 0, 1))
        manifest.append({"file": name, "tag": tag})
    write_json(os.path.join(args.out, "synth.json"), {"images": manifest, "config": cfg.to_dict()})
    return {"written": len(images), "out": args.out}


def cmd_pretrain(args, cfg):
    os.makedirs(args.out, exist_ok=True)
    model, hist = pretrain_denoiser(cfg, resolve_corpus(cfg), os.path.join(args.out, "pretrain_log.jsonl"))
    path = os.path.join(args.out, "denoiser.ntnt")
    from_model(model, "denoiser", cfg.to_dict(), cfg.denoiser_iters).save(path)
    return {"checkpoint": path, "iterations": len(hist), "final_loss": hist[-1] if hist else None}


def cmd_train_translator(args, cfg):
    os.makedirs(args.out, exist_ok=True)
    den = _load(args.denoiser, "denoiser")
    model, hist = train_translator(cfg, den, resolve_corpus(cfg), os.path.join(args.out, "translator_log.jsonl"))
    path = os.path.join(args.out, "translator.ntnt")
    from_model(model, "translator", cfg.to_dict(), cfg.translator_iters).save(path)
    return {"checkpoint": path, "iterations": len(hist), "final_total": hist[-1].l_total if hist else None}


def cmd_denoise(args, cfg):
    den = _load(args.denoiser, "denoiser")
    tr = _load(args.translator, "translator") if args.translator else None
    files = list_images(args.input) if os.path.isdir(args.input) else [args.input]
    os.makedirs(args.out, exist_ok=True)
    root = Prng(cfg.seed).split(STREAM_EVAL)
    written = []
    for i, f in enumerate(files):
        img = load_image(f)
        base = os.path.splitext(os.path.basename(f))[0]
        ext = image_extension(img.shape[0])
        if tr is not None:
            i_t, out = denoise_pipeline(img, tr, den, root.split(i))
            save_image(os.path.join(args.out, base + "_translated" + ext), i_t)
        else:
            out = run_denoiser(img, den)
        dst = os.path.join(args.out, base + "_denoised" + ext)
        save_image(dst, out)
        written.append(dst)
    return {"written": written}


def cmd_eval(args, cfg):
    den = _load(args.denoiser, "denoiser")
    tr = _load(args.translator, "translator") if args.translator else None
    pairs = _external_pairs(args.clean_dir, args.noisy_dir) if args.clean_dir else test_pairs(cfg)
    res = evaluate(pairs, den, tr, Prng(cfg.seed).split(STREAM_EVAL))
    os.makedirs(args.out, exist_ok=True)
    write_json(os.path.join(args.out, "eval.json"), res)
    return res


def cmd_analyze(args, cfg):
    noisy, clean = load_image(args.noisy), load_image(args.clean)
    tr = _load(args.translator, "translator") if args.translator else None
    reports = analyze_noise(noisy, clean, tr, Prng(cfg.seed).split(STREAM_EVAL))
    os.makedirs(args.out, exist_ok=True)
    out = {}
    for name, rep in zip(("input", "translated"), reports):
        rep.spatial_hist.write_csv(os.path.join(args.out, f"{name}_spatial_hist.csv"))
        rep.freq_hist.write_csv(os.path.join(args.out, f"{name}_freq_hist.csv"))
        out[name] = rep.to_dict()
    write_json(os.path.join(args.out, "noise_report.json"), out)
    return {k: reports[i].summary() for i, k in enumerate(list(out))}


def cmd_ablate(args, cfg):
    den = _load(args.denoiser, "denoiser")
    tr = _load(args.translator, "translator") if args.translator else None
    pairs = _external_pairs(args.clean_dir, args.noisy_dir) if args.clean_dir else test_pairs(cfg)
    levels = [float(v) for v in args.levels.split(",")] if args.levels else list(ABLATION_LEVELS)
    table = ablate_gaussian_addition(pairs, den, levels, tr, Prng(cfg.seed).split(STREAM_EVAL, 1))
    os.makedirs(args.out, exist_ok=True)
    write_json(os.path.join(args.out, "ablation.json"), table)
    return table


def cmd_run(args, cfg):
    m = run_experiment(cfg, args.out, args.denoiser)
    return {"out": args.out, "ablation": m["ablation"], "noise": m["noise"]}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ntnet", description="Noise-translation denoising at desk scale.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def add(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        _add_config_flags(p)
        p.set_defaults(fn=fn)
        return p

    p = add("synth", cmd_synth, "write a synthetic clean/noisy image corpus")
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--channels", type=int, choices=(1, 3), default=3)
    p.add_argument("--noise", choices=("mixture", "correlated", "signal-dependent", "gaussian"), default="mixture")
    p.add_argument("--level", type=float, default=None, help="noise level in 8-bit units (gaussian/correlated)")

    add("pretrain", cmd_pretrain, "pretrain the Gaussian denoiser")
    p = add("train-translator", cmd_train_translator, "train the noise translator against a frozen denoiser")
    p.add_argument("--denoiser", required=True)

    p = add("denoise", cmd_denoise, "denoise an image or a directory of images")
    p.add_argument("--input", required=True)
    p.add_argument("--denoiser", required=True)
    p.add_argument("--translator")

    for name, fn, help_ in (("eval", cmd_eval, "PSNR/SSIM of denoiser and pipeline"),
                            ("ablate-addition", cmd_ablate, "Gaussian-addition baseline table")):
        p = add(name, fn, help_)
        p.add_argument("--denoiser", required=True)
        p.add_argument("--translator")
        p.add_argument("--clean-dir")
        p.add_argument("--noisy-dir")
        if name == "ablate-addition":
            p.add_argument("--levels", help="comma-separated 8-bit levels, default 0,5,10,15")

    p = add("analyze", cmd_analyze, "spatial/frequency noise diagnostics for one image pair")
    p.add_argument("--noisy", required=True)
    p.add_argument("--clean", required=True)
    p.add_argument("--translator")

    p = add("run", cmd_run, "pretrain, train the translator and evaluate in one go")
    p.add_argument("--denoiser", help="reuse a pretrained denoiser checkpoint")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s")
    try:
        if getattr(args, "clean_dir", None) and not getattr(args, "noisy_dir", None):
            raise CliError("--clean-dir requires --noisy-dir")
        cfg = _config(args)
        result = args.fn(args, cfg)
    except Exception as exc:  # every failure becomes a JSON diagnostic
        _emit_error(type(exc).__name__, str(exc))
        return 1
    sys.stdout.write(json.dumps(result, sort_keys=True, default=str) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
