import numpy as np

from odma_ura.channel import build_chunk_scene, draw_channel
from odma_ura.encoder import encode_messages, sample_messages
from odma_ura.rng import complex_normal, substream
from odma_ura.sic import ChunkReceiver, SicState, refine_channel, subtract_and_update


def chunk_scene(cfg, books, code, k, seed):
    msgs = sample_messages(cfg, substream(seed, "messages"), k)
    bits = msgs.bits.copy()
    bits[:, : cfg.chunk_bits] = 0  # all users in chunk 0
    from odma_ura.encoder import message_set

    msgs = message_set(bits, cfg)
    enc = encode_messages(msgs, books, code)
    H = draw_channel(cfg.antennas, k, substream(seed, "channel"))
    return msgs, build_chunk_scene(enc.frames, H, cfg.noise_var, substream(seed, "noise"))


def test_refine_channel_recovers_truth(rng):
    H = complex_normal(rng, (6, 3))
    X = complex_normal(rng, (3, 200))
    H_est = refine_channel(H @ X, X, 1e-9)
    np.testing.assert_allclose(H_est, H, atol=1e-6)
    assert refine_channel(np.zeros((6, 4)), np.ones((3, 4)), 0.0) is None


def test_subtract_and_update(rng):
    H = complex_normal(rng, (4, 2))
    X = complex_normal(rng, (2, 5))
    state = SicState(residual=H @ X)
    msgs = np.array([[0, 1], [1, 0]], np.uint8)
    new = subtract_and_update(state, H, X, msgs)
    assert np.allclose(new.residual, 0) and new.round == 1
    assert len(new.accepted) == 2 and len(state.accepted) == 0


def test_receiver_decodes_easy_chunk(cfg, books, code):
    easy = cfg.replace(ebn0_db=0.0)
    from odma_ura.codebooks import build_codebooks

    eb = build_codebooks(easy)
    msgs, scene = chunk_scene(easy, eb, code, 10, 11)
    out = ChunkReceiver(easy, eb, code).run(scene.Y, 0, seed=0)
    truth = {r.tobytes() for r in msgs.bits}
    got = {r.tobytes() for r in out.messages}
    assert got == truth
    assert out.failure is None and out.passes >= 1
    assert out.rounds[0].activity >= 9


def test_receiver_empty_chunk(cfg, books, code):
    rng = substream(0, "noise")
    Y = complex_normal(rng, (cfg.antennas, cfg.chunk_length))
    out = ChunkReceiver(cfg, books, code).run(Y, 0, seed=0)
    assert out.messages.shape[0] == 0


def test_receiver_mmse_detector(cfg, code):
    from odma_ura.codebooks import build_codebooks

    easy = cfg.replace(ebn0_db=0.0, detector="mmse")
    eb = build_codebooks(easy)
    msgs, scene = chunk_scene(easy, eb, code, 8, 12)
    out = ChunkReceiver(easy, eb, code).run(scene.Y, 0, seed=0)
    assert len(out.messages) >= 6
