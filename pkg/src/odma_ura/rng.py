"""Deterministic random substreams.

Every random draw in a run comes from ``substream(seed, purpose, *counters)``.
The spawn key is built from a fixed purpose id plus integer counters (trial,
chunk, round, ...), so streams are independent of evaluation order and of how
trials are distributed over workers.
"""

from __future__ import annotations

import numpy as np

PURPOSES = {
    "codebook": 0,
    "messages": 1,
    "channel": 2,
    "noise": 3,
    "altmin-init": 4,
    "detector-bench": 5,
    "factor-bench": 6,
    "fec-bench": 7,
}


def substream(seed: int, purpose: str, *counters: int) -> np.random.Generator:
    key = (PURPOSES[purpose], *(int(c) for c in counters))
    seq = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=key)
    return np.random.Generator(np.random.PCG64(seq))


def complex_normal(rng: np.random.Generator, shape, var: float = 1.0) -> np.ndarray:
    """i.i.d. circular Gaussian entries with E|z|^2 = var."""
    scale = np.sqrt(var / 2)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
