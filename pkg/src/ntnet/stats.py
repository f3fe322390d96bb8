"""Empirical distribution tools: moments, order-statistics W1, transport oracle, histograms."""
from __future__ import annotations

import csv
import itertools
import json
from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from .rand import NoiseField

EXHAUSTIVE_MAX = 8
ASSIGNMENT_MAX = 64


def empirical_moments(field) -> Tuple[float, float]:
    """Population mean and (1/N) standard deviation over every element."""
    values = field.values if isinstance(field, NoiseField) else np.asarray(field, dtype=np.float64)
    if values.size == 0:
        raise ValueError("empirical_moments: empty field")
    return float(values.mean()), float(values.std())


def _channels(x) -> np.ndarray:
    """Coerce to a (C, H*W) matrix of per-channel samples."""
    if isinstance(x, NoiseField):
        x = x.values
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        return x[None, :]
    if x.ndim == 3:
        # (H, W, C) noise field layout
        return x.reshape(-1, x.shape[2]).T
    return x.reshape(x.shape[0], -1)


def w1_sorted(x, y, h: int = None, w: int = None, c: int = None) -> float:
    """1-Wasserstein distance between equal-size empirical measures, per channel.

    ``x`` and ``y`` are 1-D samples, (C, H*W) per-channel matrices or (H, W, C)
    fields. Each channel is sorted and the absolute gaps of the order
    statistics are summed, normalized by 1/(H*W*C).
    """
    xs = _channels(x)
    ys = _channels(y)
    if xs.shape != ys.shape:
        raise ValueError(f"w1_sorted: sample shapes differ, {xs.shape} vs {ys.shape}")
    if h is not None and w is not None and c is not None and xs.size != h * w * c:
        raise ValueError(f"w1_sorted: expected {h}*{w}*{c} samples, got {xs.size}")
    gaps = np.abs(np.sort(xs, axis=1, kind="stable") - np.sort(ys, axis=1, kind="stable"))
    return float(gaps.sum() / xs.size)


def w1_oracle(x, y) -> float:
    """Exact optimal-transport cost between two equal-size 1-D empirical measures.

    Exhaustive over all matchings for n <= 8, Hungarian assignment for n <= 64.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    n = x.size
    if n != y.size:
        raise ValueError(f"w1_oracle: lengths differ, {n} vs {y.size}")
    if n == 0:
        raise ValueError("w1_oracle: empty samples")
    if n > ASSIGNMENT_MAX:
        raise ValueError(f"w1_oracle: n={n} exceeds the oracle limit {ASSIGNMENT_MAX}")
    cost = np.abs(x[:, None] - y[None, :])
    if n <= EXHAUSTIVE_MAX:
        perms = _permutations(n)
        best = cost[np.arange(n), perms].sum(axis=1).min()
        return float(best / n)
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].sum() / n)


@lru_cache(maxsize=None)
def _permutations(n: int) -> np.ndarray:
    return np.array(list(itertools.permutations(range(n))), dtype=np.intp).reshape(-1, n)


@dataclass
class Histogram:
    edges: np.ndarray
    counts: np.ndarray
    density: np.ndarray

    @property
    def bins(self) -> int:
        return self.counts.size

    @property
    def range(self) -> Tuple[float, float]:
        return float(self.edges[0]), float(self.edges[-1])

    def integral(self) -> float:
        return float((self.density * np.diff(self.edges)).sum())

    def to_dict(self) -> dict:
        return {"edges": self.edges.tolist(), "counts": self.counts.tolist(), "density": self.density.tolist()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["left_edge", "right_edge", "count", "density"])
            for i in range(self.bins):
                wr.writerow([repr(float(self.edges[i])), repr(float(self.edges[i + 1])),
                             int(self.counts[i]), repr(float(self.density[i]))])


def histogram(samples, bins: int, lo: float, hi: float) -> Histogram:
    """Uniform bins over [lo, hi]: half-open [e_k, e_k+1) except the last bin, which is closed.

    Samples outside the range are clamped into the edge bins.
    """
    if bins < 1:
        raise ValueError(f"histogram: bins must be >= 1, got {bins}")
    if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
        raise ValueError(f"histogram: invalid range ({lo}, {hi})")
    s = np.asarray(samples, dtype=np.float64).ravel()
    edges = np.linspace(lo, hi, bins + 1)
    idx = np.floor((s - lo) / (hi - lo) * bins).astype(np.int64)
    idx = np.clip(idx, 0, bins - 1)
    counts = np.bincount(idx, minlength=bins).astype(np.int64)
    widths = np.diff(edges)
    total = counts.sum()
    density = counts / (total * widths) if total else np.zeros(bins)
    return Histogram(edges, counts, density)
