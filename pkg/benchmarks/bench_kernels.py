"""Numba vs pure-numpy timings for the hot kernels.

Run:  python3 benchmarks/bench_kernels.py [--repeat 20] [--json out.json]

Per-kernel numbers compare the two implementations in one process. The
end-to-end row runs one denoiser train step in a subprocess per backend, with
NTNET_DISABLE_NUMBA toggled, because the switch is read at import time.
"""
import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from ntnet import kernels

STEP_SNIPPET = r"""
import time, numpy as np
from ntnet import backend_name
from ntnet.nets import Denoiser, AdamW
from ntnet.rand import Prng
from ntnet.tensor import Tensor, backward, l1_mean
net = Denoiser(Prng(0))
opt = AdamW(net.parameters(), lr=1e-3)
x = Prng(1).uniform((4, 3, 64, 64)).astype(np.float32)
def step():
    opt.zero_grad(); backward(l1_mean(net(Tensor(x)), x)); opt.step()
step()
t = time.perf_counter()
for _ in range({n}):
    step()
print(backend_name(), (time.perf_counter() - t) / {n})
"""


def best_of(fn, repeat):
    fn()  # warm-up (and JIT compile)
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def kernel_rows(repeat):
    rng = np.random.default_rng(0)
    xp = rng.standard_normal((4, 16, 66, 66)).astype(np.float32)
    ho = wo = 64
    cols = kernels.im2col_numpy(xp, 3, 3, 1, ho, wo)
    spec = (rng.standard_normal((3 * 64, 64)) + 1j * rng.standard_normal((3 * 64, 64)))
    cases = [
        ("im2col 4x16x64x64 k3", lambda: kernels.im2col_numpy(xp, 3, 3, 1, ho, wo),
         lambda: kernels.im2col_numba(xp, 3, 3, 1, ho, wo)),
        ("col2im 4x16x64x64 k3", lambda: kernels.col2im_numpy(cols, xp.shape, 3, 3, 1, ho, wo),
         lambda: kernels.col2im_numba(cols, xp.shape, 3, 3, 1, ho, wo)),
        ("fft rows 192x64", lambda: kernels.fft_rows_numpy(spec),
         lambda: kernels.fft_rows_numba(spec)),
    ]
    rows = []
    for name, f_np, f_nb in cases:
        t_np = best_of(f_np, repeat)
        t_nb = best_of(f_nb, repeat) if kernels.im2col_numba is not None else float("nan")
        rows.append({"kernel": name, "numpy_ms": 1e3 * t_np, "numba_ms": 1e3 * t_nb})
    return rows


def train_step_rows(n):
    rows = {}
    for disable in ("1", "0"):
        env = dict(os.environ, NTNET_DISABLE_NUMBA=disable)
        out = subprocess.run([sys.executable, "-c", STEP_SNIPPET.format(n=n)], env=env,
                             capture_output=True, text=True, check=True).stdout.split()
        rows[out[0] + "_ms"] = 1e3 * float(out[1])
    return {"kernel": "denoiser train step (batch 4, 64x64)", **rows}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--steps", type=int, default=5)
    ap.add_argument("--json", help="also write the table as JSON")
    args = ap.parse_args()
    if kernels.im2col_numba is None:
        sys.exit("numba is disabled or missing; unset NTNET_DISABLE_NUMBA to compare backends")
    rows = kernel_rows(args.repeat) + [train_step_rows(args.steps)]
    print(f"{'kernel':40s} {'numpy ms':>10s} {'numba ms':>10s} {'speedup':>8s}")
    for r in rows:
        print(f"{r['kernel']:40s} {r['numpy_ms']:10.2f} {r['numba_ms']:10.2f} {r['numpy_ms'] / r['numba_ms']:8.2f}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
