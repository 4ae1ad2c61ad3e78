"""CRC-aided polar coding for the payload segment.

Bit order is MSB first everywhere: the payload enters the CRC register
first-bit-first, the CRC is appended at the tail, and the polar transform
uses natural (non bit-reversed) indexing, ``x = u F^{(x)n}`` with
``F = [[1, 0], [1, 1]]``.

The list decoder works on a batch of codewords at once; arrays carry shape
``(batch, list, n)`` and every path-selection step is a numpy operation.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Protocol

import numpy as np

from .config import FecConfig

LLR_CLIP = 30.0


class Codec(Protocol):
    """Minimal interface the receiver needs from a channel code."""

    info_bits: int
    codeword_bits: int

    def encode(self, payload: np.ndarray) -> np.ndarray: ...

    def decode(self, llrs: np.ndarray) -> DecodeResult: ...

    def check(self, payload_with_crc: np.ndarray) -> np.ndarray: ...


@dataclass
class DecodeResult:
    payload: np.ndarray  # (batch, info_bits) uint8, rows meaningless where ~valid
    valid: np.ndarray  # (batch,) bool, True when a CRC-passing path exists
    path_metric: np.ndarray  # (batch,) metric of the returned path (inf if none)


# --------------------------------------------------------------------------- CRC


def _poly_remainder(bits: np.ndarray, poly: tuple[int, ...]) -> np.ndarray:
    """Remainder of bits(x) * x^deg mod poly(x), MSB first."""
    deg = len(poly) - 1
    reg = np.concatenate([np.asarray(bits, dtype=np.uint8), np.zeros(deg, np.uint8)])
    g = np.array(poly, dtype=np.uint8)
    for i in range(len(bits)):
        if reg[i]:
            reg[i : i + deg + 1] ^= g
    return reg[-deg:]


@lru_cache(maxsize=16)
def crc_matrix(length: int, poly: tuple[int, ...]) -> np.ndarray:
    """(length, deg) matrix S with crc(p) = p @ S mod 2 (the CRC is linear)."""
    eye = np.eye(length, dtype=np.uint8)
    mat = np.stack([_poly_remainder(row, poly) for row in eye]) if length else np.zeros((0, len(poly) - 1), np.uint8)
    mat.setflags(write=False)
    return mat


def crc_remainder(payload: np.ndarray, poly: tuple[int, ...]) -> np.ndarray:
    payload = np.asarray(payload, dtype=np.uint8)
    s = crc_matrix(payload.shape[-1], poly)
    # float matmul is exact here (sums stay far below 2**24) and hits BLAS
    return (payload.astype(np.float32) @ s.astype(np.float32)).astype(np.int64).astype(np.uint8) & 1


def crc_append(payload: np.ndarray, poly: tuple[int, ...]) -> np.ndarray:
    payload = np.asarray(payload, dtype=np.uint8)
    return np.concatenate([payload, crc_remainder(payload, poly)], axis=-1)


def crc_check(word: np.ndarray, poly: tuple[int, ...]) -> np.ndarray:
    word = np.asarray(word, dtype=np.uint8)
    deg = len(poly) - 1
    body, tail = word[..., :-deg], word[..., -deg:]
    return np.all(crc_remainder(body, poly) == tail, axis=-1)


# ------------------------------------------------------------- construction


def _phi(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = np.ones_like(x)
    small = (x > 0) & (x < 10)
    large = x >= 10
    out[small] = np.exp(-0.4527 * x[small] ** 0.86 + 0.0218)
    xl = x[large]
    out[large] = np.sqrt(np.pi / xl) * np.exp(-xl / 4) * (1 - 10 / (7 * xl))
    return out


def _phi_inv(y: float) -> float:
    # phi is decreasing on (0, inf); bisect in log space
    lo, hi = 1e-10, 1e4
    for _ in range(200):
        mid = np.sqrt(lo * hi)
        if _phi(np.array([mid]))[0] > y:
            lo = mid
        else:
            hi = mid
    return float(np.sqrt(lo * hi))


def ga_reliability(n: int, design_snr_db: float) -> np.ndarray:
    """Mean LLR of each synthetic bit channel under the Gaussian approximation."""
    m0 = 4 * 10 ** (design_snr_db / 10)

    def walk(m: float, size: int) -> list[float]:
        if size == 1:
            return [m]
        phi = _phi(np.array([m]))[0]
        check = _phi_inv(1 - (1 - phi) ** 2) if phi < 1 - 1e-15 else m * m / 4
        return walk(check, size // 2) + walk(2 * m, size // 2)

    return np.array(walk(m0, n))


@lru_cache(maxsize=16)
def info_set(n: int, k: int, design_snr_db: float) -> np.ndarray:
    rel = ga_reliability(n, design_snr_db)
    idx = np.sort(np.argsort(rel, kind="stable")[n - k :])
    idx.setflags(write=False)
    return idx


def polar_transform(u: np.ndarray) -> np.ndarray:
    """x = u F^{(x)n} over GF(2), batched over leading axes."""
    x = np.array(u, dtype=np.uint8, copy=True)
    n = x.shape[-1]
    lead = x.shape[:-1]
    h = 1
    while h < n:
        v = x.reshape(*lead, n // (2 * h), 2, h)
        v[..., 0, :] ^= v[..., 1, :]
        h *= 2
    return x


# ------------------------------------------------------------------ decoder


def _boxplus(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return (
        np.sign(a) * np.sign(b) * np.minimum(np.abs(a), np.abs(b))
        + np.log1p(np.exp(-np.abs(a + b)))
        - np.log1p(np.exp(-np.abs(a - b)))
    )


def _take(arr: np.ndarray, perm: np.ndarray | None) -> np.ndarray:
    if perm is None:
        return arr
    return np.take_along_axis(arr, perm[..., None], axis=1)


def _compose(first: np.ndarray | None, second: np.ndarray | None) -> np.ndarray | None:
    if first is None:
        return second
    if second is None:
        return first
    return np.take_along_axis(first, second, axis=1)


class PolarCode:
    """CRC-aided polar code with batched successive-cancellation list decoding."""

    def __init__(self, cfg: FecConfig):
        cfg.validate()
        self.cfg = cfg
        self.info_bits = cfg.info_bits
        self.codeword_bits = cfg.codeword_bits
        self.list_size = cfg.list_size
        self.poly = cfg.crc_poly
        self.info_idx = info_set(cfg.codeword_bits, cfg.coded_info_bits, cfg.design_snr_db)
        frozen = np.ones(cfg.codeword_bits, dtype=bool)
        frozen[self.info_idx] = False
        self.frozen = frozen
        self.frozen_idx = np.flatnonzero(frozen)

    def with_list_size(self, list_size: int) -> PolarCode:
        from dataclasses import replace

        return PolarCode(replace(self.cfg, list_size=list_size))

    # encoding -----------------------------------------------------------
    def encode(self, payload: np.ndarray) -> np.ndarray:
        return self.encode_with_crc(crc_append(payload, self.poly))

    def encode_with_crc(self, word: np.ndarray) -> np.ndarray:
        word = np.asarray(word, dtype=np.uint8)
        u = np.zeros((*word.shape[:-1], self.codeword_bits), dtype=np.uint8)
        u[..., self.info_idx] = word
        return polar_transform(u)

    def check(self, payload_with_crc: np.ndarray) -> np.ndarray:
        return crc_check(payload_with_crc, self.poly)

    # decoding -----------------------------------------------------------
    def decode(self, llrs: np.ndarray, list_size: int | None = None) -> DecodeResult:
        """CRC-aided SCL decoding; positive LLR favours bit 0."""
        llrs = np.asarray(llrs, dtype=float)
        single = llrs.ndim == 1
        llrs = np.atleast_2d(llrs)
        batch = llrs.shape[0]
        size = list_size or self.list_size
        if batch == 0:
            return DecodeResult(
                np.zeros((0, self.info_bits), np.uint8), np.zeros(0, bool), np.zeros(0)
            )
        llrs = np.clip(np.nan_to_num(llrs), -LLR_CLIP, LLR_CLIP)
        alpha = np.broadcast_to(llrs[:, None, :], (batch, size, self.codeword_bits))
        pm = np.full((batch, size), np.inf)
        pm[:, 0] = 0.0
        _, u, _, pm = self._node(alpha, 0, pm, size)
        words = u[..., self.info_idx]
        ok = crc_check(words, self.poly) & np.isfinite(pm)
        masked = np.where(ok, pm, np.inf)
        best = np.argmin(masked, axis=1)
        rows = np.arange(batch)
        result = DecodeResult(
            payload=words[rows, best, : self.info_bits].copy(),
            valid=ok[rows, best],
            path_metric=masked[rows, best],
        )
        if single:
            return DecodeResult(result.payload[0], result.valid[0:1], result.path_metric[0:1])
        return result

    def _node(self, alpha, lo, pm, size):
        n = alpha.shape[-1]
        frozen = self.frozen[lo : lo + n]
        if frozen.all():
            pm = pm + np.logaddexp(0.0, -alpha).sum(axis=-1)
            zeros = np.zeros(alpha.shape, dtype=np.uint8)
            return zeros, zeros, None, pm
        if n == 1:
            a = alpha[..., 0]
            cand = np.concatenate([pm + np.logaddexp(0.0, -a), pm + np.logaddexp(0.0, a)], axis=1)
            order = np.argsort(cand, axis=1, kind="stable")[:, :size]
            pm = np.take_along_axis(cand, order, axis=1)
            bit = (order >= size).astype(np.uint8)[..., None]
            return bit, bit, order % size, pm
        half = n // 2
        a1, a2 = alpha[..., :half], alpha[..., half:]
        b1, u1, p1, pm = self._node(_boxplus(a1, a2), lo, pm, size)
        a1, a2 = _take(a1, p1), _take(a2, p1)
        b2, u2, p2, pm = self._node(a2 + (1.0 - 2.0 * b1) * a1, lo + half, pm, size)
        b1, u1 = _take(b1, p2), _take(u1, p2)
        beta = np.concatenate([b1 ^ b2, b2], axis=-1)
        return beta, np.concatenate([u1, u2], axis=-1), _compose(p1, p2), pm
