"""Message segmentation and frame construction.

A B-bit message splits, MSB first, into chunk / pilot / pattern / payload
segments.  Indices are 0-based in code: pilot column ``[u_pilot]_2`` and
pattern column ``[u_pattern]_2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codebooks import Codebooks
from .config import SystemConfig
from .fec import Codec


def bits_to_int(bits: np.ndarray) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.int64)
    if bits.shape[-1] == 0:
        return np.zeros(bits.shape[:-1], dtype=np.int64)
    weights = 1 << np.arange(bits.shape[-1] - 1, -1, -1, dtype=np.int64)
    return bits @ weights


def int_to_bits(values, width: int) -> np.ndarray:
    values = np.asarray(values, dtype=np.int64)
    shifts = np.arange(width - 1, -1, -1, dtype=np.int64)
    return ((values[..., None] >> shifts) & 1).astype(np.uint8)


@dataclass(frozen=True, eq=False)
class MessageSet:
    bits: np.ndarray  # (Ka, B) uint8
    chunk_bits: int
    pilot_bits: int
    pattern_bits: int

    def __len__(self) -> int:
        return self.bits.shape[0]

    def _seg(self, start: int, width: int) -> np.ndarray:
        return self.bits[:, start : start + width]

    @property
    def chunk_index(self) -> np.ndarray:
        return bits_to_int(self._seg(0, self.chunk_bits))

    @property
    def pilot_index(self) -> np.ndarray:
        return bits_to_int(self._seg(self.chunk_bits, self.pilot_bits))

    @property
    def pattern_index(self) -> np.ndarray:
        return bits_to_int(self._seg(self.chunk_bits + self.pilot_bits, self.pattern_bits))

    @property
    def payload(self) -> np.ndarray:
        return self.bits[:, self.chunk_bits + self.pilot_bits + self.pattern_bits :]

    def subset(self, mask) -> MessageSet:
        return MessageSet(self.bits[mask], self.chunk_bits, self.pilot_bits, self.pattern_bits)


def message_set(bits: np.ndarray, cfg: SystemConfig) -> MessageSet:
    bits = np.asarray(bits, dtype=np.uint8).reshape(-1, cfg.message_bits)
    return MessageSet(bits, cfg.chunk_bits, cfg.pilot_bits, cfg.pattern_bits)


def sample_messages(cfg: SystemConfig, rng: np.random.Generator, count: int | None = None) -> MessageSet:
    """Draw distinct messages uniformly from {0,1}^B."""
    count = cfg.active_users if count is None else count
    bits = rng.integers(0, 2, size=(count, cfg.message_bits), dtype=np.uint8)
    while True:
        _, first = np.unique(bits, axis=0, return_index=True)
        dup = np.setdiff1d(np.arange(count), first)
        if dup.size == 0:
            break
        bits[dup] = rng.integers(0, 2, size=(dup.size, cfg.message_bits), dtype=np.uint8)
    return message_set(bits, cfg)


def assemble_messages(cfg: SystemConfig, chunk: int, pilot_idx, pattern_idx, payload) -> np.ndarray:
    """Inverse of segmentation: rebuild full B-bit messages."""
    pilot_idx = np.atleast_1d(pilot_idx)
    n = len(pilot_idx)
    parts = [
        int_to_bits(np.full(n, chunk), cfg.chunk_bits),
        int_to_bits(pilot_idx, cfg.pilot_bits),
        int_to_bits(np.atleast_1d(pattern_idx), cfg.pattern_bits),
        np.asarray(payload, dtype=np.uint8).reshape(n, cfg.payload_bits),
    ]
    return np.concatenate(parts, axis=1)


@dataclass(frozen=True, eq=False)
class EncodedFrames:
    chunk_index: np.ndarray
    pilot_index: np.ndarray  # 0-based column of the pilot dictionary
    pattern_index: np.ndarray  # 0-based column of the pattern dictionary
    frames: np.ndarray  # (n, T) complex


def build_frames(pilot_idx, pattern_idx, payload, books: Codebooks, code: Codec) -> np.ndarray:
    """Frames x = [pilot; pattern-placed QPSK symbols] for each row."""
    pilot_idx = np.atleast_1d(pilot_idx)
    pattern_idx = np.atleast_1d(pattern_idx)
    n = len(pilot_idx)
    tp = books.pilots.matrix.shape[0]
    tc = books.patterns.length
    frames = np.zeros((n, tp + tc), dtype=complex)
    if n == 0:
        return frames
    frames[:, :tp] = books.pilots.matrix[:, pilot_idx].T
    symbols = books.alphabet.modulate(code.encode(np.asarray(payload).reshape(n, -1)))
    slots = tp + books.patterns.support[pattern_idx]  # ascending on-positions
    frames[np.arange(n)[:, None], slots] = symbols
    return frames


def encode_messages(messages: MessageSet, books: Codebooks, code: Codec) -> EncodedFrames:
    return EncodedFrames(
        chunk_index=messages.chunk_index,
        pilot_index=messages.pilot_index,
        pattern_index=messages.pattern_index,
        frames=build_frames(
            messages.pilot_index, messages.pattern_index, messages.payload, books, code
        ),
    )


def encode_message(bits: np.ndarray, cfg: SystemConfig, books: Codebooks, code: Codec) -> EncodedFrames:
    return encode_messages(message_set(bits, cfg), books, code)
