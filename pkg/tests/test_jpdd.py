import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from odma_ura.codebooks import PatternCodebook, build_modulation
from odma_ura.counters import ComplexityCounters
from odma_ura.harness import detector_scene
from odma_ura.jpdd import (
    amp_detect,
    extract_llrs,
    hard_states,
    mmse_detect,
    retrieve_patterns,
    state_prior,
)
from odma_ura.rng import substream

STATES = build_modulation(4, 1.0).states


def joint_map(y, H, states):
    combos = np.array(list(itertools.product(range(len(states)), repeat=H.shape[1])))
    cost = np.linalg.norm(y[:, None] - H @ states[combos].T, axis=0) ** 2
    return combos[np.argmin(cost)]


def test_posteriors_normalized():
    H, idx, Y, nv, states = detector_scene(20, 10, 5.0, 30, substream(0, "detector-bench", 0))
    for det in (amp_detect(Y, H, nv, states), mmse_detect(Y, H, nv, states)):
        assert det.posteriors.shape == (10, 30, 5)
        np.testing.assert_allclose(det.posteriors.sum(-1), 1.0)
        assert not det.failed.any()


def test_amp_agrees_with_map_small():
    agree = 0
    for t in range(100):
        H, idx, Y, nv, states = detector_scene(8, 2, 10.0, 1, substream(1, "detector-bench", t))
        agree += (hard_states(amp_detect(Y, H, nv, states).posteriors)[:, 0] == joint_map(Y[:, 0], H, states)).sum()
    assert agree / 200 >= 0.95


def test_high_snr_zero_errors():
    H, idx, Y, nv, states = detector_scene(64, 8, 40.0, 50, substream(2, "detector-bench", 0))
    assert (hard_states(amp_detect(Y, H, nv, states).posteriors) == idx).all()
    assert (hard_states(mmse_detect(Y, H, nv, states).posteriors) == idx).all()


def test_literal_form_runs():
    H, idx, Y, nv, states = detector_scene(20, 10, 10.0, 20, substream(3, "detector-bench", 0))
    det = amp_detect(Y, H, nv, states, form="literal")
    assert np.isfinite(det.posteriors).all()
    with pytest.raises(ValueError):
        amp_detect(Y, H, nv, states, form="nope")


def test_amp_counter_linear_in_users():
    counts = []
    for k in (10, 20, 40):
        c = ComplexityCounters()
        H, _, Y, nv, states = detector_scene(50, k, 5.0, 150, substream(4, "detector-bench", k))
        amp_detect(Y, H, nv, states, counters=c)
        counts.append(c.total_mults("amp"))
    assert counts[1] == 2 * counts[0] and counts[2] == 2 * counts[1]


def test_sparse_prior():
    alph = build_modulation(4, 1.0)
    p = state_prior(alph, "sparse", 0.4)
    np.testing.assert_allclose(p, [0.6, 0.1, 0.1, 0.1, 0.1])
    with pytest.raises(ValueError):
        state_prior(alph, "sparse", 1.5)


def tiny_patterns():
    support = np.array([[0, 1], [1, 2], [0, 3], [2, 3]])
    dense = np.zeros((4, 4), np.uint8)
    dense[support.T, np.arange(4)] = 1
    return PatternCodebook(support=support, length=4, matrix=dense)


def test_pattern_retrieval_brute_force():
    pats = tiny_patterns()
    rng = np.random.default_rng(0)
    post = rng.dirichlet(np.ones(5), size=(3, 4))
    idx, margin = retrieve_patterns(post, pats)
    for k in range(3):
        scores = [
            sum(np.log(1 - post[k, t, 0]) if pats.matrix[t, j] else np.log(post[k, t, 0]) for t in range(4))
            for j in range(4)
        ]
        assert idx[k] == int(np.argmax(scores))
        assert margin[k] == pytest.approx(np.sort(scores)[-1] - np.sort(scores)[-2])


def test_pattern_tie_goes_to_lowest_index():
    post = np.full((4, 5), 0.2)
    idx, margin = retrieve_patterns(post, tiny_patterns())
    assert idx == 0 and margin == 0


def test_llr_signs_follow_gray_labels():
    pats = tiny_patterns()
    post = np.full((4, 5), 1e-6)
    post[0, 1 + 0b01] = 1  # slot 0 carries label 01
    post[1, 1 + 0b10] = 1  # slot 1 carries label 10
    post /= post.sum(-1, keepdims=True)
    llr = extract_llrs(post, 0, pats)
    assert llr.shape == (4,)
    assert llr[0] > 0 and llr[1] < 0 and llr[2] < 0 and llr[3] > 0
    assert np.abs(llr).max() <= 30


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_llrs_batched_match_single(seed):
    pats = tiny_patterns()
    rng = np.random.default_rng(seed)
    post = rng.dirichlet(np.ones(5), size=(3, 4))
    idx = rng.integers(0, 4, 3)
    batched = extract_llrs(post, idx, pats)
    for k in range(3):
        np.testing.assert_allclose(batched[k], extract_llrs(post[k], idx[k], pats))


def test_mmse_singular_marks_failure():
    H = np.ones((4, 2), complex)  # identical columns, no noise regularization
    det = mmse_detect(np.zeros((4, 3)), H, 0.0, STATES)
    assert det.failed.all()
