import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ntnet.rand import NoiseField
from ntnet.stats import empirical_moments, histogram, w1_oracle, w1_sorted

vals = st.floats(-100, 100, allow_nan=False, width=64)


def test_moments():
    assert empirical_moments(NoiseField(np.full((3, 3, 1), 2.5))) == (2.5, 0.0)
    assert empirical_moments(np.array([-1.0, 1.0])) == (0.0, 1.0)
    with pytest.raises(ValueError):
        empirical_moments(np.array([]))


def test_w1_examples():
    assert w1_sorted([0.0, 1.0], [2.0, 3.0]) == 2.0
    x = np.random.default_rng(0).standard_normal(50)
    assert w1_sorted(x, x[::-1]) == 0.0
    assert w1_sorted(x, x + 0.75) == pytest.approx(0.75, abs=1e-14)
    assert w1_oracle([0.0], [5.0]) == 5.0
    assert w1_oracle(x[:7], x[:7]) == 0.0
    with pytest.raises(ValueError):
        w1_sorted([1.0, 2.0], [1.0])
    with pytest.raises(ValueError):
        w1_oracle(np.zeros(65), np.zeros(65))


def test_w1_per_channel_normalization():
    x = np.zeros((4, 4, 2))
    y = np.zeros((4, 4, 2))
    y[..., 1] = 1.0  # one channel off by 1 everywhere
    assert w1_sorted(x, y, 4, 4, 2) == 0.5
    with pytest.raises(ValueError):
        w1_sorted(x, y, 4, 4, 3)


def test_oracle_exhaustive_by_hand():
    # independent of the cached permutation table: plain itertools enumeration
    rng = np.random.default_rng(5)
    for n in range(1, 7):
        x, y = rng.standard_normal(n), rng.standard_normal(n)
        best = min(sum(abs(x[i] - y[p[i]]) for i in range(n)) for p in itertools.permutations(range(n))) / n
        assert w1_oracle(x, y) == pytest.approx(best, abs=1e-13)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 8).flatmap(lambda n: st.tuples(arrays(np.float64, n, elements=vals),
                                                     arrays(np.float64, n, elements=vals))))
def test_order_statistics_match_oracle(xy):
    x, y = xy
    assert abs(w1_sorted(x, y) - w1_oracle(x, y)) <= 1e-12 * max(1.0, np.abs(x).max(), np.abs(y).max())


def triple(n):
    return st.tuples(*[arrays(np.float64, n, elements=vals)] * 3)


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 30).flatmap(triple), st.floats(0.01, 50), st.floats(-50, 50))
def test_metric_properties(xyz, a, c):
    x, y, z = xyz
    dxy = w1_sorted(x, y)
    assert dxy == w1_sorted(y, x)
    assert dxy >= 0
    assert (dxy == 0) == np.array_equal(np.sort(x), np.sort(y))
    assert dxy <= w1_sorted(x, z) + w1_sorted(z, y) + 1e-12
    assert w1_sorted(a * x, a * y) == pytest.approx(a * dxy, rel=1e-12, abs=1e-11)
    assert w1_sorted(x + c, y + c) == pytest.approx(dxy, abs=1e-11)


def test_histogram_conventions(tmp_path):
    h = histogram(np.array([0.5]), 2, 0.0, 1.0)
    assert h.counts.tolist() == [0, 1]  # [lo, mid) and [mid, hi]
    h = histogram(np.array([1.0, -5.0, 7.0]), 2, 0.0, 1.0)
    assert h.counts.tolist() == [1, 2]  # hi lands in the closed last bin, outliers clamp
    rng = np.random.default_rng(0)
    h = histogram(rng.standard_normal(1000), 17, -2.0, 2.0)
    assert h.counts.sum() == 1000 and abs(h.integral() - 1) < 1e-9
    h.write_csv(tmp_path / "h.csv")
    rows = (tmp_path / "h.csv").read_text().splitlines()
    assert len(rows) == 18
    assert set(h.to_dict()) >= {"edges", "counts", "density"}
    with pytest.raises(ValueError):
        histogram(np.zeros(3), 4, 1.0, 1.0)
    with pytest.raises(ValueError):
        histogram(np.zeros(3), 0, 0.0, 1.0)


def test_histogram_gaussian_mode_density():
    x = np.random.default_rng(1).standard_normal(100_000)
    h = histogram(x, 64, -4.0, 4.0)
    peak = h.density[31:33].mean()  # bins adjacent to the mode at 0
    pdf0 = 1 / np.sqrt(2 * np.pi)
    assert abs(peak / pdf0 - 1) < 0.1
