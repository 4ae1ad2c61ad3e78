"""System, FEC and algorithm configuration.

All three configs are frozen dataclasses.  On disk they live together in one
flat JSON object whose keys are the field names below; unknown keys are
rejected so that typos surface as configuration errors.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path


class ConfigError(ValueError):
    """Raised for inconsistent or infeasible configurations."""


# x^14 + x^10 + x^9 + x^7 + x^6 + x^5 + x + 1, coefficients from x^14 down to x^0
CRC14_POLY = (1, 0, 0, 0, 1, 1, 0, 1, 1, 1, 0, 0, 0, 1, 1)


@dataclass(frozen=True)
class FecConfig:
    info_bits: int = 68
    crc_poly: tuple[int, ...] = CRC14_POLY
    codeword_bits: int = 128
    list_size: int = 8
    design_snr_db: float = 2.0

    @property
    def crc_bits(self) -> int:
        return len(self.crc_poly) - 1

    @property
    def coded_info_bits(self) -> int:
        """Bits entering the polar encoder (payload + CRC)."""
        return self.info_bits + self.crc_bits

    def validate(self) -> None:
        n = self.codeword_bits
        if n < 2 or n & (n - 1):
            raise ConfigError(f"codeword_bits must be a power of two, got {n}")
        if self.coded_info_bits > n:
            raise ConfigError("payload + CRC does not fit in the polar codeword")
        if self.list_size < 1:
            raise ConfigError("list_size must be >= 1")
        if self.crc_poly[0] != 1 or self.crc_poly[-1] != 1:
            raise ConfigError("CRC polynomial must have leading and constant terms")


@dataclass(frozen=True)
class AlgoConfig:
    reg_u: float = 1e-3
    reg_v: float = 1e-3
    altmin_max_iters: int = 100
    altmin_tol: float = 1e-5
    amp_max_iters: int = 20
    amp_prior: str = "uniform"  # "uniform" | "sparse"
    amp_damping: float = 0.0
    amp_form: str = "matched"  # "matched" | "literal"
    sic_max_rounds: int = 4
    pattern_prob_floor: float = 1e-30
    pilot_mode: str = "dft"  # "dft" | "gaussian"
    somp_rank_aware: bool = True
    detector: str = "amp"  # "amp" | "mmse"
    seed: int = 0

    def validate(self) -> None:
        if not (0 < self.reg_u < 1 and 0 < self.reg_v < 1):
            raise ConfigError("regularizers must lie in (0, 1)")
        if self.altmin_max_iters < 1 or self.amp_max_iters < 1:
            raise ConfigError("iteration limits must be positive")
        if self.altmin_tol <= 0:
            raise ConfigError("altmin_tol must be positive")
        if self.amp_prior not in ("uniform", "sparse"):
            raise ConfigError(f"unknown amp_prior {self.amp_prior!r}")
        if self.amp_form not in ("matched", "literal"):
            raise ConfigError(f"unknown amp_form {self.amp_form!r}")
        if not 0.0 <= self.amp_damping <= 1.0:
            raise ConfigError("amp_damping must be in [0, 1]")
        if self.sic_max_rounds < 0:
            raise ConfigError("sic_max_rounds must be >= 0")
        if self.pattern_prob_floor <= 0:
            raise ConfigError("pattern_prob_floor must be positive")
        if self.pilot_mode not in ("dft", "gaussian"):
            raise ConfigError(f"unknown pilot_mode {self.pilot_mode!r}")
        if self.detector not in ("amp", "mmse"):
            raise ConfigError(f"unknown detector {self.detector!r}")


@dataclass(frozen=True)
class SystemConfig:
    total_channel_uses: int = 3200
    chunk_count: int = 16
    pilot_length: int = 50
    message_bits: int = 100
    chunk_bits: int = 4
    pilot_bits: int = 14
    pattern_bits: int = 14
    payload_bits: int = 68
    antennas: int = 50
    active_users: int = 150
    ebn0_db: float = -6.0
    power_ratio: float = 0.2
    bits_per_symbol: int = 2
    noise_var: float = 1.0
    fec: FecConfig = field(default_factory=FecConfig)
    algo: AlgoConfig = field(default_factory=AlgoConfig)

    @property
    def chunk_length(self) -> int:
        return self.total_channel_uses // self.chunk_count

    @property
    def data_length(self) -> int:
        return self.chunk_length - self.pilot_length

    @property
    def n_symbols(self) -> int:
        """Modulated payload symbols per frame (= ones per pattern column)."""
        return self.fec.codeword_bits // self.bits_per_symbol

    @property
    def n_pilots(self) -> int:
        return 2**self.pilot_bits

    @property
    def n_patterns(self) -> int:
        return 2**self.pattern_bits

    def validate(self) -> SystemConfig:
        self.fec.validate()
        self.algo.validate()
        positive = {
            "total_channel_uses": self.total_channel_uses,
            "chunk_count": self.chunk_count,
            "pilot_length": self.pilot_length,
            "message_bits": self.message_bits,
            "payload_bits": self.payload_bits,
            "antennas": self.antennas,
            "active_users": self.active_users,
        }
        for name, value in positive.items():
            if value < 1:
                raise ConfigError(f"{name} must be positive, got {value}")
        if self.total_channel_uses % self.chunk_count:
            raise ConfigError("total_channel_uses must be divisible by chunk_count")
        if self.data_length < 1:
            raise ConfigError("pilot_length leaves no room for data")
        split = self.chunk_bits + self.pilot_bits + self.pattern_bits + self.payload_bits
        if split != self.message_bits:
            raise ConfigError(f"bit split sums to {split}, expected {self.message_bits}")
        if 2**self.chunk_bits != self.chunk_count:
            raise ConfigError("chunk_count must equal 2**chunk_bits")
        if self.payload_bits != self.fec.info_bits:
            raise ConfigError("payload_bits must match fec.info_bits")
        if self.bits_per_symbol != 2:
            raise ConfigError("only QPSK (2 bits per symbol) is supported")
        if self.fec.codeword_bits % self.bits_per_symbol:
            raise ConfigError("codeword length not a multiple of bits_per_symbol")
        if self.n_symbols > self.data_length:
            raise ConfigError("modulated payload does not fit in the data sub-frame")
        if not 0.0 < self.power_ratio < 1.0:
            raise ConfigError("power_ratio must be in (0, 1)")
        if self.noise_var <= 0:
            raise ConfigError("noise_var must be positive")
        if self.pattern_bits > 0 and math.comb(self.data_length, self.n_symbols) < self.n_patterns:
            raise ConfigError("not enough distinct on-off patterns for pattern_bits")
        return self

    def replace(self, **changes) -> SystemConfig:
        """Return a copy with flat keys overridden (keys may belong to fec/algo)."""
        if "payload_bits" in changes and "info_bits" not in changes:
            changes["info_bits"] = changes["payload_bits"]
        return from_flat({**to_flat(self), **changes})


@dataclass(frozen=True)
class EnergyBudget:
    total: float  # energy per user frame
    noise_var: float
    pilot: float  # squared norm of each pilot codeword
    per_symbol: float  # energy of each data symbol


def energy_budget(cfg: SystemConfig) -> EnergyBudget:
    total = cfg.message_bits * cfg.noise_var * 10 ** (cfg.ebn0_db / 10)
    pilot = cfg.power_ratio * total
    return EnergyBudget(
        total=total,
        noise_var=cfg.noise_var,
        pilot=pilot,
        per_symbol=(total - pilot) / cfg.n_symbols,
    )


def pilot_length_for(active_users: int) -> int:
    """Pilot sub-frame length used in the reference setups (T = 200)."""
    return 50 if active_users <= 600 else 75


_SUBCONFIGS = {"fec": FecConfig, "algo": AlgoConfig}


def to_flat(cfg: SystemConfig) -> dict:
    out = {}
    for f in dataclasses.fields(cfg):
        value = getattr(cfg, f.name)
        if f.name in _SUBCONFIGS:
            out.update(dataclasses.asdict(value))
        else:
            out[f.name] = value
    out["crc_poly"] = list(out["crc_poly"])
    return out


def from_flat(values: dict) -> SystemConfig:
    groups: dict[str, dict] = {name: {} for name in _SUBCONFIGS}
    top = {}
    known_top = {f.name for f in dataclasses.fields(SystemConfig)} - set(_SUBCONFIGS)
    owners = {
        f.name: name for name, cls in _SUBCONFIGS.items() for f in dataclasses.fields(cls)
    }
    for key, value in values.items():
        if key in known_top:
            top[key] = value
        elif key in owners:
            groups[owners[key]][key] = value
        else:
            raise ConfigError(f"unknown configuration key {key!r}")
    if "crc_poly" in groups["fec"]:
        groups["fec"]["crc_poly"] = tuple(int(b) for b in groups["fec"]["crc_poly"])
    # payload_bits and info_bits describe the same quantity
    if "payload_bits" in top and "info_bits" not in groups["fec"]:
        groups["fec"]["info_bits"] = top["payload_bits"]
    fec = FecConfig(**groups["fec"])
    algo = AlgoConfig(**groups["algo"])
    return SystemConfig(**top, fec=fec, algo=algo).validate()


def load_config(path: str | Path) -> SystemConfig:
    try:
        values = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(values, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    return from_flat(values)


def save_config(cfg: SystemConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(to_flat(cfg), indent=2) + "\n")
