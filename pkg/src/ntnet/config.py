"""Training configuration."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from typing import Optional


@dataclass
class TrainConfig:
    seed: int = 0
    crop_size: int = 64
    batch_size: int = 4
    denoiser_iters: int = 2000
    translator_iters: int = 1000
    denoiser_lr_init: float = 1e-3
    denoiser_lr_final: float = 1e-7
    translator_lr_init: float = 1e-3
    translator_lr_final: float = 1e-5
    weight_decay: float = 0.0
    # noise levels below are in 8-bit units (x/255 internally)
    pretrain_sigma: float = 15.0
    aug_lo: float = 0.0
    aug_hi: float = 15.0
    sigma_tilde: float = 100.0
    alpha: float = 5e-2
    beta: float = 2e-3
    # synthetic "real" noise: correlated / signal-dependent mixture
    noise_family: str = "mixture"
    corr_sigma_lo: float = 8.0
    corr_sigma_hi: float = 20.0
    sd_a: float = 0.01
    sd_b_level: float = 5.0
    # architecture
    translator_width: int = 8
    translator_depth: int = 2
    denoiser_width: int = 16
    denoiser_depth: int = 4
    # data
    corpus: Optional[str] = None
    test_corpus: Optional[str] = None
    synth_train_images: int = 48
    synth_test_images: int = 20
    synth_image_size: int = 96
    test_corr_sigma: float = 15.0
    log_every: int = 50

    NOISE_FAMILIES = ("mixture", "correlated", "signal-dependent")

    def validate(self) -> "TrainConfig":
        levels = ("pretrain_sigma", "aug_lo", "aug_hi", "sigma_tilde", "alpha", "beta",
                  "corr_sigma_lo", "corr_sigma_hi", "sd_a", "sd_b_level", "weight_decay", "test_corr_sigma")
        for name in levels:
            if getattr(self, name) < 0:
                raise ValueError(f"config: {name} must be >= 0, got {getattr(self, name)}")
        if self.aug_lo > self.aug_hi:
            raise ValueError(f"config: aug_lo ({self.aug_lo}) > aug_hi ({self.aug_hi})")
        if self.corr_sigma_lo > self.corr_sigma_hi:
            raise ValueError("config: corr_sigma_lo > corr_sigma_hi")
        if self.noise_family not in self.NOISE_FAMILIES:
            raise ValueError(f"config: noise_family must be one of {self.NOISE_FAMILIES}")
        for name in ("crop_size", "batch_size", "translator_width", "denoiser_width"):
            if getattr(self, name) < 1:
                raise ValueError(f"config: {name} must be >= 1")
        for name in ("denoiser_iters", "translator_iters", "translator_depth", "denoiser_depth"):
            if getattr(self, name) < 0:
                raise ValueError(f"config: {name} must be >= 0")
        m = 2 ** max(self.translator_depth, self.denoiser_depth)
        if self.crop_size % m:
            raise ValueError(f"config: crop_size {self.crop_size} must be divisible by {m}")
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"config: unknown fields {sorted(unknown)}")
        return cls(**d).validate()

    @classmethod
    def from_json_file(cls, path) -> "TrainConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def replace(self, **kw) -> "TrainConfig":
        d = self.to_dict()
        d.update({k: v for k, v in kw.items() if v is not None})
        return TrainConfig.from_dict(d)
