"""PUPE accounting and interval estimates."""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np

from .config import ConfigError


@dataclass(frozen=True)
class PupeReport:
    n_md: int
    n_fa: int
    list_size: int
    p_md: float
    p_fa: float

    @property
    def pupe(self) -> float:
        return self.p_md + self.p_fa


def _as_keys(bits: Iterable, length: int | None) -> list[bytes]:
    keys = []
    for b in bits:
        arr = np.asarray(b, dtype=np.uint8).ravel()
        if length is not None and arr.size != length:
            raise ConfigError(f"bit-vector of length {arr.size}, expected {length}")
        keys.append(arr.tobytes())
    return keys


def compute_pupe(truth: Sequence, decoded: Sequence) -> PupeReport:
    """Missed-detection / false-alarm counts between a true and a decoded list.

    ``truth`` and ``decoded`` are sequences of equal-length bit vectors.  The
    false-alarm rate is normalized by the output list size (1 when empty).
    """
    length = len(np.asarray(truth[0]).ravel()) if len(truth) else None
    if length is None and len(decoded):
        length = len(np.asarray(decoded[0]).ravel())
    truth_keys = set(_as_keys(truth, length))
    dec_keys = set(_as_keys(decoded, length))
    n_md = len(truth_keys - dec_keys)
    n_fa = len(dec_keys - truth_keys)
    ka = len(truth_keys)
    size = ka - n_md + n_fa
    return PupeReport(
        n_md=n_md,
        n_fa=n_fa,
        list_size=size,
        p_md=n_md / max(1, ka),
        p_fa=n_fa / max(1, size),
    )


def wilson_interval(successes: int, trials: int, z: float = 1.959963984540054):
    if trials == 0:
        return 0.0, 1.0
    p = successes / trials
    denom = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == trials else min(1.0, centre + half)
    return lo, hi
