"""Rayleigh block-fading MIMO channel with AWGN, Y = H X + N."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .encoder import MessageSet
from .rng import complex_normal


@dataclass(frozen=True, eq=False)
class ChunkScene:
    H: np.ndarray  # (M, K)
    X: np.ndarray  # (K, T)
    Y: np.ndarray  # (M, T)
    noise_var: float
    messages: MessageSet | None = None

    @property
    def active(self) -> int:
        return self.X.shape[0]


def draw_channel(antennas: int, users: int, rng: np.random.Generator) -> np.ndarray:
    return complex_normal(rng, (antennas, users))


def transmit(H: np.ndarray, X: np.ndarray, noise_var: float, rng: np.random.Generator) -> np.ndarray:
    H = np.asarray(H)
    X = np.asarray(X)
    if H.shape[1] != X.shape[0]:
        raise ValueError(f"channel {H.shape} does not conform with frames {X.shape}")
    signal = H @ X if X.shape[0] else np.zeros((H.shape[0], X.shape[1]), dtype=complex)
    if noise_var == 0:
        return signal.astype(complex)
    return signal + complex_normal(rng, signal.shape, noise_var)


def build_chunk_scene(
    frames: np.ndarray,
    H: np.ndarray,
    noise_var: float,
    rng: np.random.Generator,
    messages: MessageSet | None = None,
) -> ChunkScene:
    frames = np.asarray(frames, dtype=complex)
    return ChunkScene(H=H, X=frames, Y=transmit(H, frames, noise_var, rng), noise_var=noise_var, messages=messages)
