"""Pilot dictionary, on-off pattern dictionary and QPSK alphabet.

Codebooks are pure functions of (config, seed) so the transmitter and the
receiver rebuild identical copies; nothing is ever serialized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .config import ConfigError, EnergyBudget, SystemConfig, energy_budget
from .rng import complex_normal, substream


@dataclass(frozen=True, eq=False)
class PilotCodebook:
    matrix: np.ndarray  # (Tp, 2**B1), every column has squared norm `energy`
    energy: float
    mode: str
    rows: np.ndarray | None = None  # DFT rows kept, DFT mode only

    @property
    def size(self) -> int:
        return self.matrix.shape[1]

    def correlate(self, r: np.ndarray) -> np.ndarray:
        """Return A^H r for r of shape (Tp, k); FFT based in DFT mode."""
        r = np.asarray(r, dtype=complex)
        if r.ndim == 1:
            return self.correlate(r[:, None])[:, 0]
        if self.rows is None:
            return self.matrix.conj().T @ r
        n = self.size
        buf = np.zeros((n, r.shape[1]), dtype=complex)
        buf[self.rows] = r
        scale = math.sqrt(self.energy / len(self.rows))
        return scale * n * np.fft.ifft(buf, axis=0)


@dataclass(frozen=True, eq=False)
class PatternCodebook:
    support: np.ndarray  # (2**B2, Ns) sorted on-positions per pattern
    length: int  # Tc
    matrix: np.ndarray  # dense (Tc, 2**B2) binary matrix

    @property
    def size(self) -> int:
        return self.support.shape[0]

    @property
    def ones_per_pattern(self) -> int:
        return self.support.shape[1]


@dataclass(frozen=True, eq=False)
class ModulationAlphabet:
    symbols: np.ndarray  # indexed by Gray label b0*2 + b1
    per_symbol_energy: float

    @property
    def order(self) -> int:
        return len(self.symbols)

    @property
    def bits_per_symbol(self) -> int:
        return int(math.log2(self.order))

    @property
    def states(self) -> np.ndarray:
        """Detector alphabet: idle state 0 followed by the constellation."""
        return np.concatenate([[0.0 + 0.0j], self.symbols])

    def modulate(self, bits: np.ndarray) -> np.ndarray:
        bits = np.asarray(bits, dtype=np.int64).reshape(*np.shape(bits)[:-1], -1, 2)
        return self.symbols[2 * bits[..., 0] + bits[..., 1]]


def build_modulation(order: int, per_symbol_energy: float) -> ModulationAlphabet:
    if order != 4:
        raise ConfigError(f"unsupported modulation order {order}")
    if per_symbol_energy <= 0:
        raise ConfigError("per-symbol energy must be positive")
    a = math.sqrt(per_symbol_energy / 2)
    labels = np.array([(0, 0), (0, 1), (1, 0), (1, 1)])
    symbols = a * ((1 - 2 * labels[:, 0]) + 1j * (1 - 2 * labels[:, 1]))
    return ModulationAlphabet(symbols=symbols.astype(complex), per_symbol_energy=per_symbol_energy)


@lru_cache(maxsize=8)
def _unit_pilots(seed: int, length: int, bits: int, mode: str):
    n = 2**bits
    rng = substream(seed, "codebook", 0)
    if mode == "dft":
        if length > n:
            raise ConfigError(f"pilot length {length} exceeds DFT size {n}")
        rows = np.sort(rng.choice(n, size=length, replace=False))
        mat = np.exp(-2j * np.pi * np.outer(rows, np.arange(n)) / n) / math.sqrt(length)
        return mat, rows
    if mode == "gaussian":
        mat = complex_normal(rng, (length, n))
        mat /= np.linalg.norm(mat, axis=0, keepdims=True)
        return mat, None
    raise ConfigError(f"unknown pilot mode {mode!r}")


def build_pilot_codebook(cfg: SystemConfig, budget: EnergyBudget | None = None) -> PilotCodebook:
    budget = budget or energy_budget(cfg)
    mat, rows = _unit_pilots(cfg.algo.seed, cfg.pilot_length, cfg.pilot_bits, cfg.algo.pilot_mode)
    return PilotCodebook(
        matrix=math.sqrt(budget.pilot) * mat,
        energy=budget.pilot,
        mode=cfg.algo.pilot_mode,
        rows=rows,
    )


@lru_cache(maxsize=8)
def _pattern_support(seed: int, length: int, ones: int, bits: int):
    n = 2**bits
    if ones > length or (bits > 0 and ones == length):
        raise ConfigError("infeasible pattern weight for the data sub-frame")
    if math.comb(length, ones) < n:
        raise ConfigError("not enough distinct weight-constant patterns")
    rng = substream(seed, "codebook", 1)
    support = np.sort(rng.random((n, length)).argsort(axis=1)[:, :ones], axis=1)
    # resample duplicates until all columns are distinct
    while True:
        _, first = np.unique(support, axis=0, return_index=True)
        dup = np.setdiff1d(np.arange(n), first)
        if dup.size == 0:
            break
        fresh = rng.random((dup.size, length)).argsort(axis=1)[:, :ones]
        support[dup] = np.sort(fresh, axis=1)
    dense = np.zeros((length, n), dtype=np.uint8)
    dense[support.T, np.arange(n)[None, :]] = 1
    support.setflags(write=False)
    dense.setflags(write=False)
    return support, dense


def build_pattern_codebook(cfg: SystemConfig) -> PatternCodebook:
    support, dense = _pattern_support(
        cfg.algo.seed, cfg.data_length, cfg.n_symbols, cfg.pattern_bits
    )
    return PatternCodebook(support=support, length=cfg.data_length, matrix=dense)


@dataclass(frozen=True, eq=False)
class Codebooks:
    pilots: PilotCodebook
    patterns: PatternCodebook
    alphabet: ModulationAlphabet
    budget: EnergyBudget


def build_codebooks(cfg: SystemConfig) -> Codebooks:
    budget = energy_budget(cfg)
    return Codebooks(
        pilots=build_pilot_codebook(cfg, budget),
        patterns=build_pattern_codebook(cfg),
        alphabet=build_modulation(2**cfg.bits_per_symbol, budget.per_symbol),
        budget=budget,
    )
