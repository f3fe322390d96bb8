"""Networks (Gaussian injection block, U-Net translator, stand-in denoiser) and their optimizer."""
from __future__ import annotations

import math
from typing import Dict, Iterable, List, Optional

import numpy as np

from .functional import conv2d, layer_norm_channels, simple_gate, upsample_nearest2x
from .rand import Prng
from .tensor import ShapeError, Tensor, add, sub

LEVEL_SCALE = 255.0


class Module:
    """Ordered parameter container with named children."""

    def __init__(self):
        self.params: Dict[str, Tensor] = {}
        self.children: Dict[str, "Module"] = {}

    def named_parameters(self, prefix: str = "") -> Dict[str, Tensor]:
        out = {prefix + k: v for k, v in self.params.items()}
        for name, child in self.children.items():
            out.update(child.named_parameters(f"{prefix}{name}."))
        return out

    def parameters(self) -> List[Tensor]:
        return list(self.named_parameters().values())

    def freeze(self) -> "Module":
        for p in self.parameters():
            p.requires_grad = False
            p.grad = None
        return self

    def unfreeze(self) -> "Module":
        for p in self.parameters():
            p.requires_grad = True
        return self

    @property
    def frozen(self) -> bool:
        return not any(p.requires_grad for p in self.parameters())

    def astype(self, dtype) -> "Module":
        for p in self.parameters():
            p.data = p.data.astype(dtype)
        return self

    def load_arrays(self, arrays: Dict[str, np.ndarray]) -> None:
        named = self.named_parameters()
        missing = set(named) - set(arrays)
        if missing:
            raise KeyError(f"missing parameters: {sorted(missing)}")
        for k, p in named.items():
            a = np.asarray(arrays[k])
            if a.shape != p.shape:
                raise ShapeError(f"parameter {k}: expected {p.shape}, got {a.shape}")
            p.data = a.astype(p.dtype).copy()


def _uniform_init(prng: Prng, shape, fan_in: int, dtype) -> np.ndarray:
    bound = 1.0 / math.sqrt(fan_in)
    return prng.uniform(shape, -bound, bound).astype(dtype)


class Conv(Module):
    def __init__(self, cin: int, cout: int, k: int, prng: Prng, stride: int = 1, padding: int = 0,
                 zero_init: bool = False, dtype=np.float32):
        super().__init__()
        self.stride, self.padding = stride, padding
        fan_in = cin * k * k
        if zero_init:
            w = np.zeros((cout, cin, k, k), dtype=dtype)
            b = np.zeros(cout, dtype=dtype)
        else:
            w = _uniform_init(prng, (cout, cin, k, k), fan_in, dtype)
            b = _uniform_init(prng, (cout,), fan_in, dtype)
        self.params["weight"] = Tensor(w, requires_grad=True)
        self.params["bias"] = Tensor(b, requires_grad=True)

    def __call__(self, x: Tensor) -> Tensor:
        return conv2d(x, self.params["weight"], self.params["bias"], self.stride, self.padding)


def inject_gaussian(x: Tensor, sigma_tilde: float, prng: Optional[Prng]) -> Tensor:
    """x + N(0, (sigma_tilde/255)^2) per element; the draw is a constant for autodiff."""
    if sigma_tilde <= 0:
        return x
    if prng is None:
        raise ValueError("noise injection needs a Prng")
    noise = prng.normal(x.shape, 0.0, sigma_tilde / LEVEL_SCALE).astype(x.dtype)
    return add(x, noise)


class GIBlock(Module):
    """Activation-free residual block with additive Gaussian injection on its input.

    y = x + proj(gate(expand(norm(x + eps)))), eps ~ N(0, (sigma_tilde/255)^2),
    drawn fresh on every call (training and inference alike).
    """

    def __init__(self, channels: int, prng: Prng, sigma_tilde: float = 100.0, eps: float = 1e-6,
                 dtype=np.float32):
        super().__init__()
        self.channels = channels
        self.sigma_tilde = float(sigma_tilde)
        self.eps = eps
        self.params["norm_gain"] = Tensor(np.ones(channels, dtype=dtype), requires_grad=True)
        self.params["norm_bias"] = Tensor(np.zeros(channels, dtype=dtype), requires_grad=True)
        self.children["expand"] = Conv(channels, 2 * channels, 3, prng, padding=1, dtype=dtype)
        self.children["proj"] = Conv(channels, channels, 1, prng, zero_init=True, dtype=dtype)

    def __call__(self, x: Tensor, prng: Optional[Prng] = None) -> Tensor:
        if x.data.ndim != 4 or x.shape[1] != self.channels:
            raise ShapeError(f"GIBlock({self.channels}): got input {x.shape}")
        h = inject_gaussian(x, self.sigma_tilde, prng)
        h = layer_norm_channels(h, self.params["norm_gain"], self.params["norm_bias"], self.eps)
        h = simple_gate(self.children["expand"](h))
        return add(x, self.children["proj"](h))


class UNet(Module):
    """Residual U-Net body shared by the translator and the denoiser.

    Encoder level l has width ``width * 2**l``; each level runs ``blocks``
    GIBlocks, then a 2x2 stride-2 conv doubles the width. The decoder upsamples
    (nearest), halves the width with a 1x1 conv, adds the skip and runs
    ``blocks`` more GIBlocks. The output conv is zero-initialized.
    """

    def __init__(self, channels: int, width: int, depth: int, blocks: int, middle_blocks: int,
                 sigma_tilde: float, prng: Prng, dtype=np.float32):
        super().__init__()
        self.channels, self.width, self.depth = channels, width, depth
        self.blocks, self.middle_blocks = blocks, middle_blocks
        self.sigma_tilde = float(sigma_tilde)
        ch = self.children
        ch["stem"] = Conv(channels, width, 3, prng.split(0), padding=1, dtype=dtype)
        for lvl in range(depth):
            w = width * 2 ** lvl
            for b in range(blocks):
                ch[f"enc{lvl}_{b}"] = GIBlock(w, prng.split(1, lvl, b), sigma_tilde, dtype=dtype)
            ch[f"down{lvl}"] = Conv(w, 2 * w, 2, prng.split(2, lvl), stride=2, dtype=dtype)
        wm = width * 2 ** depth
        for b in range(middle_blocks):
            ch[f"mid_{b}"] = GIBlock(wm, prng.split(3, b), sigma_tilde, dtype=dtype)
        for lvl in reversed(range(depth)):
            w = width * 2 ** lvl
            ch[f"up{lvl}"] = Conv(2 * w, w, 1, prng.split(4, lvl), dtype=dtype)
            for b in range(blocks):
                ch[f"dec{lvl}_{b}"] = GIBlock(w, prng.split(5, lvl, b), sigma_tilde, dtype=dtype)
        ch["out"] = Conv(width, channels, 3, prng.split(6), padding=1, zero_init=True, dtype=dtype)

    def check_input(self, x: Tensor) -> None:
        if x.data.ndim != 4 or x.shape[1] != self.channels:
            raise ShapeError(f"expected (N, {self.channels}, H, W) input, got {x.shape}")
        m = 2 ** self.depth
        if x.shape[2] % m or x.shape[3] % m:
            raise ShapeError(f"spatial size {x.shape[2:]} not divisible by 2**depth = {m}")

    def body(self, x: Tensor, prng: Optional[Prng]) -> Tensor:
        self.check_input(x)
        ch = self.children
        h = ch["stem"](x)
        skips = []
        for lvl in range(self.depth):
            for b in range(self.blocks):
                h = ch[f"enc{lvl}_{b}"](h, prng)
            skips.append(h)
            h = ch[f"down{lvl}"](h)
        for b in range(self.middle_blocks):
            h = ch[f"mid_{b}"](h, prng)
        for lvl in reversed(range(self.depth)):
            h = add(ch[f"up{lvl}"](upsample_nearest2x(h)), skips[lvl])
            for b in range(self.blocks):
                h = ch[f"dec{lvl}_{b}"](h, prng)
        return ch["out"](h)

    def hparams(self) -> dict:
        return {"channels": self.channels, "width": self.width, "depth": self.depth,
                "blocks": self.blocks, "middle_blocks": self.middle_blocks,
                "sigma_tilde": self.sigma_tilde}


class Translator(UNet):
    """I_T = I + f(I); every block injects Gaussian noise."""

    def __init__(self, prng: Prng, channels: int = 3, width: int = 8, depth: int = 2,
                 sigma_tilde: float = 100.0, blocks: int = 2, middle_blocks: int = 2, dtype=np.float32):
        super().__init__(channels, width, depth, blocks, middle_blocks, sigma_tilde, prng, dtype)

    def __call__(self, x: Tensor, prng: Optional[Prng] = None) -> Tensor:
        return add(x, self.body(x, prng))


class Denoiser(UNet):
    """Gaussian denoiser stand-in: predicts the noise residual, output = I - r(I).

    Deterministic; its blocks carry no injection.
    """

    def __init__(self, prng: Prng, channels: int = 3, width: int = 16, depth: int = 4,
                 blocks: int = 1, middle_blocks: int = 1, dtype=np.float32):
        super().__init__(channels, width, depth, blocks, middle_blocks, 0.0, prng, dtype)

    def __call__(self, x: Tensor) -> Tensor:
        return sub(x, self.body(x, None))


def count_params(params) -> int:
    if isinstance(params, Module):
        params = params.parameters()
    return int(sum(p.size for p in params))


# ---------------------------------------------------------------------------
# optimization
# ---------------------------------------------------------------------------


def cosine_lr(step: int, total: int, lr_init: float, lr_final: float) -> float:
    if total <= 0 or not 0 <= step <= total:
        raise ValueError(f"cosine_lr: step {step} outside [0, {total}]")
    return lr_final + 0.5 * (lr_init - lr_final) * (1.0 + math.cos(math.pi * step / total))


class AdamW:
    """Adam with decoupled weight decay: p -= lr * (m_hat / (sqrt(v_hat) + eps) + wd * p)."""

    def __init__(self, params: Iterable[Tensor], lr: float = 1e-3, betas=(0.9, 0.999),
                 eps: float = 1e-8, weight_decay: float = 0.0):
        self.params = [p for p in params]
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.step_count = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None

    def step(self, lr: Optional[float] = None) -> None:
        lr = self.lr if lr is None else lr
        self.step_count += 1
        t = self.step_count
        c1 = 1.0 - self.beta1 ** t
        c2 = 1.0 - self.beta2 ** t
        for p, m, v in zip(self.params, self.m, self.v):
            g = p.grad if p.grad is not None else np.zeros_like(p.data)
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            upd = (m / c1) / (np.sqrt(v / c2) + self.eps) + self.weight_decay * p.data
            p.data = (p.data - lr * upd).astype(p.dtype, copy=False)
