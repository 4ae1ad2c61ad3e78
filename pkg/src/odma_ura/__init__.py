"""Unsourced random access receiver for on-off division multiple access with many antennas.

Pipeline per chunk: activity estimate, low-rank factorization, pilot-based
ambiguity compensation, joint pattern/data detection, CRC-aided polar list
decoding and successive interference cancellation.
"""

from .config import AlgoConfig, ConfigError, FecConfig, SystemConfig, load_config, save_config
from .harness import ExperimentSpec, run_detector_bench, run_end_to_end, run_factor_bench, run_trial

__all__ = [
    "AlgoConfig",
    "ConfigError",
    "ExperimentSpec",
    "FecConfig",
    "SystemConfig",
    "load_config",
    "run_detector_bench",
    "run_end_to_end",
    "run_factor_bench",
    "run_trial",
    "save_config",
]
