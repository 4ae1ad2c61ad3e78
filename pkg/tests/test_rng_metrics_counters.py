import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from odma_ura.config import ConfigError
from odma_ura.counters import ComplexityCounters
from odma_ura.metrics import compute_pupe, wilson_interval
from odma_ura.rng import complex_normal, substream


def test_substreams_reproducible_and_distinct():
    a = substream(7, "channel", 1, 2).standard_normal(4)
    b = substream(7, "channel", 1, 2).standard_normal(4)
    c = substream(7, "channel", 2, 1).standard_normal(4)
    d = substream(7, "noise", 1, 2).standard_normal(4)
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c) and not np.allclose(a, d)


def test_complex_normal_variance():
    z = complex_normal(substream(0, "noise"), 200_000, 2.5)
    assert np.mean(np.abs(z) ** 2) == pytest.approx(2.5, rel=0.02)
    assert abs(np.mean(z.real * z.imag)) < 0.02


def test_pupe_counts():
    truth = np.array([[0, 0], [0, 1], [1, 0]], np.uint8)
    decoded = np.array([[0, 1], [1, 1]], np.uint8)
    rep = compute_pupe(truth, decoded)
    assert (rep.n_md, rep.n_fa, rep.list_size) == (2, 1, 2)
    assert rep.pupe == pytest.approx(2 / 3 + 1 / 2)


def test_pupe_empty_and_mismatch():
    truth = np.zeros((3, 4), np.uint8)[:1]
    assert compute_pupe(truth, np.zeros((0, 4), np.uint8)).p_fa == 0.0
    with pytest.raises(ConfigError):
        compute_pupe(np.zeros((1, 4), np.uint8), np.zeros((1, 5), np.uint8))


@given(st.integers(0, 500), st.integers(1, 500))
def test_wilson_contains_estimate(k, n):
    k = min(k, n)
    lo, hi = wilson_interval(k, n)
    assert 0 <= lo <= k / n <= hi <= 1


@given(st.lists(st.tuples(st.sampled_from("abc"), st.integers(0, 10**6)), max_size=20))
def test_counter_merge_is_order_free(ops):
    a, b = ComplexityCounters(), ComplexityCounters()
    for stage, n in ops:
        a.add(stage, n)
    for stage, n in reversed(ops):
        b.add(stage, n)
    assert a.total_mults() == b.total_mults()
    assert ComplexityCounters().merge(a).merge(b).total_mults() == 2 * a.total_mults()
