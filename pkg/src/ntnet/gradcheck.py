"""Finite-difference verification of reverse-mode gradients."""
from dataclasses import dataclass, field
from typing import Callable, List, Sequence, Tuple, Union

import numpy as np

from .tensor import Tensor, backward


@dataclass
class GradcheckReport:
    passed: bool
    max_rel_err: float
    n_checked: int
    excluded: List[Tuple[int, int]] = field(default_factory=list)
    worst: Tuple[int, int] = (-1, -1)

    def __str__(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"gradcheck {status}: max rel err {self.max_rel_err:.3e} over {self.n_checked} coords "
                f"({len(self.excluded)} excluded at kinks)")


def gradcheck(
    f: Callable[..., Tensor],
    x: Union[Tensor, Sequence[Tensor]],
    h: float = 1e-5,
    tol: float = 1e-4,
    floor: float = 1e-6,
    kink_tol: float = 1e-2,
) -> GradcheckReport:
    """Compare ``backward`` against central differences for every coordinate.

    ``f`` takes the tensors in ``x`` and returns a scalar tensor. A coordinate
    is excluded (not failed) when its one-sided slopes jump by far more than
    the local curvature explains, i.e. a kink lies within ``h``. Relative
    error is ``|a - n| / max(|a|, |n|, floor)``.
    """
    inputs = [x] if isinstance(x, Tensor) else list(x)
    for t in inputs:
        if t.dtype != np.float64:
            raise TypeError("gradcheck requires float64 inputs")
        t.data = np.ascontiguousarray(t.data)
        t.requires_grad = True
        t.grad = None
    out = f(*inputs)
    backward(out)
    analytic = [np.zeros_like(t.data) if t.grad is None else t.grad.copy() for t in inputs]
    f0 = float(out.data)

    def value() -> float:
        return float(f(*inputs).data)

    max_err, n_checked, worst = 0.0, 0, (-1, -1)
    excluded: List[Tuple[int, int]] = []
    noise = 1e3 * np.finfo(np.float64).eps * max(abs(f0), 1.0) / h
    for ti, t in enumerate(inputs):
        flat = t.data.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            fvals = []
            for k in (2, 1, -1, -2):
                flat[j] = orig + k * h
                fvals.append(value())
            flat[j] = orig
            fp2, fp, fm, fm2 = fvals
            fwd, bwd = (fp - f0) / h, (f0 - fm) / h
            jump = abs(fwd - bwd)
            curvature = abs((fp2 - fp) / h - fwd) + abs(bwd - (fm - fm2) / h)
            if jump > 4 * curvature + noise and jump > kink_tol * max(abs(fwd), abs(bwd), floor):
                excluded.append((ti, j))
                continue
            num = (fp - fm) / (2 * h)
            a = analytic[ti].reshape(-1)[j]
            err = abs(a - num) / max(abs(a), abs(num), floor)
            n_checked += 1
            if err > max_err:
                max_err, worst = err, (ti, j)
    return GradcheckReport(max_err < tol, max_err, n_checked, excluded, worst)
