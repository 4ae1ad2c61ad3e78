"""Monte-Carlo experiment drivers and CSV output.

Three experiment modes share one sweep/trial skeleton:

* ``pupe``   end-to-end PUPE over all chunks with the full receiver,
* ``ser``    slot-wise detector symbol error rate with a known channel,
* ``factor`` factorization + ambiguity compensation quality only.

Each (sweep point, trial) task draws its randomness from its own substream,
so results do not depend on the number of workers or on scheduling order.
"""

from __future__ import annotations

import csv
import logging
import math
from collections.abc import Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channel import build_chunk_scene, draw_channel
from .codebooks import build_codebooks, build_modulation
from .config import ConfigError, SystemConfig, pilot_length_for
from .counters import ComplexityCounters
from .encoder import encode_messages, int_to_bits, message_set, sample_messages
from .factorization import ChunkFailure, factorize
from .fec import PolarCode
from .jpdd import amp_detect, hard_states, mmse_detect, state_moments
from .metrics import compute_pupe, wilson_interval
from .rng import complex_normal, substream
from .sic import ChunkReceiver, RoundStats

log = logging.getLogger(__name__)

AXES = {
    "pupe": ("ebn0", "antennas", "users"),
    "ser": ("snr", "antennas", "users"),
    "factor": ("snr", "antennas", "users"),
}

PUPE_HEADER = [
    "sweep_value", "trials", "n_md", "n_fa", "p_md", "p_md_lo", "p_md_hi",
    "p_fa", "p_fa_lo", "p_fa_hi", "pupe", "avg_sic_rounds", "mults_altmin", "mults_somp", "mults_amp",
]
SER_HEADER = ["M", "K", "snr_db", "detector", "trials", "decisions", "errors", "ser"]
FACTOR_HEADER = [
    "M", "T", "K", "snr_db", "trials", "support_recovery", "frame_error", "failures",
]
ROUND_HEADER = ["sweep_value", "trial", "chunk", "round", "activity", "passers", "residual_energy"]


@dataclass(frozen=True)
class ExperimentSpec:
    mode: str  # "pupe" | "ser" | "factor"
    axis: str
    values: tuple[float, ...]
    trials: int
    base: SystemConfig = field(default_factory=SystemConfig)
    seed: int = 0
    workers: int = 1
    detector_users: int = 25  # K for ser/factor modes unless swept
    snr_db: float = 0.0  # ser/factor modes unless swept; inf means noiseless
    distinct_pilots: bool = False  # factor mode: redraw pilot bits so no two users collide

    def __post_init__(self):
        if self.mode not in AXES:
            raise ConfigError(f"unknown experiment mode {self.mode!r}")
        if self.axis not in AXES[self.mode]:
            raise ConfigError(f"axis {self.axis!r} not valid for mode {self.mode!r}")
        if not self.values:
            raise ConfigError("sweep needs at least one value")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")


def parse_sweep(text: str) -> tuple[str, tuple[float, ...]]:
    """Parse ``axis=v1,v2,...``."""
    if "=" not in text:
        raise ConfigError(f"sweep must look like axis=v1,v2 (got {text!r})")
    axis, _, raw = text.partition("=")
    try:
        values = tuple(float(v) for v in raw.split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"bad sweep values in {text!r}") from exc
    return axis.strip(), values


def point_config(spec: ExperimentSpec, value: float) -> SystemConfig:
    cfg = spec.base
    if spec.axis == "ebn0":
        return cfg.replace(ebn0_db=float(value))
    if spec.axis == "antennas":
        return cfg.replace(antennas=int(value))
    if spec.axis == "users" and spec.mode == "pupe":
        ka = int(value)
        return cfg.replace(active_users=ka, pilot_length=pilot_length_for(ka))
    return cfg


def _run_tasks(fn, tasks: Sequence, workers: int) -> list:
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path: str | Path | None, header: Sequence[str], rows: Iterable[dict]) -> list[dict]:
    rows = list(rows)
    if path is None:
        return rows
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(row[h]) for h in header])
    return rows


# ------------------------------------------------------------------ end-to-end


@dataclass
class TrialResult:
    value: float
    trial: int
    n_md: int
    n_fa: int
    list_size: int
    active: int
    passes: int
    counters: ComplexityCounters
    rounds: list[RoundStats]


def run_trial(cfg: SystemConfig, seed: int, trial: int, value: float = 0.0) -> TrialResult:
    """Simulate all chunks of one frame and decode them."""
    books = build_codebooks(cfg)
    code = PolarCode(cfg.fec)
    receiver = ChunkReceiver(cfg, books, code)
    messages = sample_messages(cfg, substream(seed, "messages", trial))
    encoded = encode_messages(messages, books, code)
    decoded = []
    counters = ComplexityCounters()
    rounds: list[RoundStats] = []
    passes = 0
    for chunk in range(cfg.chunk_count):
        sel = encoded.chunk_index == chunk
        H = draw_channel(cfg.antennas, int(sel.sum()), substream(seed, "channel", trial, chunk))
        scene = build_chunk_scene(
            encoded.frames[sel], H, cfg.noise_var, substream(seed, "noise", trial, chunk)
        )
        out = receiver.run(scene.Y, chunk, seed, trial)
        if out.failure:
            log.debug("trial %d chunk %d: %s", trial, chunk, out.failure)
        decoded.append(out.messages)
        counters.merge(out.counters)
        rounds.extend(out.rounds)
        passes += out.passes
    report = compute_pupe(messages.bits, np.concatenate(decoded))
    return TrialResult(
        value=value,
        trial=trial,
        n_md=report.n_md,
        n_fa=report.n_fa,
        list_size=report.list_size,
        active=len(messages),
        passes=passes,
        counters=counters,
        rounds=rounds,
    )


def _pupe_task(args):
    cfg, seed, trial, value = args
    return run_trial(cfg, seed, trial, value)


def aggregate_pupe(value: float, results: Sequence[TrialResult], chunks: int) -> dict:
    trials = len(results)
    n_md = sum(r.n_md for r in results)
    n_fa = sum(r.n_fa for r in results)
    total = sum(r.active for r in results)
    listed = sum(r.list_size for r in results)
    # p_fa follows the per-trial ratio definition; its Wilson interval uses pooled counts
    p_fa = float(np.mean([r.n_fa / max(1, r.list_size) for r in results]))
    lo, hi = wilson_interval(n_md, total)
    fa_lo, fa_hi = wilson_interval(n_fa, listed)
    counters = ComplexityCounters()
    for r in results:
        counters.merge(r.counters)
    p_md = n_md / max(1, total)
    return {
        "sweep_value": float(value),
        "trials": trials,
        "n_md": n_md,
        "n_fa": n_fa,
        "p_md": p_md,
        "p_md_lo": lo,
        "p_md_hi": hi,
        "p_fa": p_fa,
        "p_fa_lo": fa_lo,
        "p_fa_hi": fa_hi,
        "pupe": p_md + p_fa,
        "avg_sic_rounds": sum(r.passes for r in results) / (trials * chunks),
        "mults_altmin": counters.total_mults("altmin") // trials,
        "mults_somp": counters.total_mults("somp") // trials,
        "mults_amp": counters.total_mults("amp") // trials,
    }


def run_end_to_end(spec: ExperimentSpec, out: str | Path | None = None, rounds_out=None) -> list[dict]:
    tasks = [
        (point_config(spec, v), spec.seed, t, v) for v in spec.values for t in range(spec.trials)
    ]
    results = _run_tasks(_pupe_task, tasks, spec.workers)
    rows = []
    for v in spec.values:
        subset = [r for r in results if r.value == v]
        rows.append(aggregate_pupe(v, subset, spec.base.chunk_count))
        log.info("pupe %s=%g: %.4f", spec.axis, v, rows[-1]["pupe"])
    if rounds_out is not None:
        write_csv(
            rounds_out,
            ROUND_HEADER,
            (
                {"sweep_value": float(r.value), "trial": r.trial, **vars(s)}
                for r in results
                for s in r.rounds
            ),
        )
    return write_csv(out, PUPE_HEADER, rows)


# ------------------------------------------------------------- detector bench


def detector_scene(m: int, k: int, snr_db: float, slots: int, rng: np.random.Generator):
    """Known-channel slot model with uniform states over {0} U QPSK (unit symbol energy).

    SNR = E||H x||^2 / E||n||^2 = K Var[state] / noise_var.
    """
    states = build_modulation(4, 1.0).states
    _, var_s = state_moments(states, np.full(len(states), 1 / len(states)))
    H = complex_normal(rng, (m, k))
    idx = rng.integers(0, len(states), size=(k, slots))
    noise_var = k * var_s / 10 ** (snr_db / 10)
    Y = H @ states[idx] + complex_normal(rng, (m, slots), noise_var)
    return H, idx, Y, noise_var, states


def _ser_task(args):
    m, k, snr_db, slots, seed, trial, amp_kw = args
    H, idx, Y, noise_var, states = detector_scene(
        m, k, snr_db, slots, substream(seed, "detector-bench", trial)
    )
    amp = amp_detect(Y, H, noise_var, states, **amp_kw)
    mmse = mmse_detect(Y, H, noise_var, states)
    return (
        int((hard_states(amp.posteriors) != idx).sum()),
        int((hard_states(mmse.posteriors) != idx).sum()),
        idx.size,
        int(amp.failed.sum()),
    )


def _point_mk(spec: ExperimentSpec, value: float) -> tuple[int, int, float]:
    m, k, snr = spec.base.antennas, spec.detector_users, spec.snr_db
    if spec.axis == "antennas":
        m = int(value)
    elif spec.axis == "users":
        k = int(value)
    elif spec.axis == "snr":
        snr = float(value)
    return m, k, snr


def paired_ser_trials(
    m: int, k: int, snr_db: float, slots: int, seed: int, trials: int,
    amp_kw: dict | None = None, workers: int = 1,
) -> np.ndarray:
    """Per-trial (amp errors, mmse errors, decisions, amp failed slots) on shared draws."""
    tasks = [(m, k, snr_db, slots, seed, t, amp_kw or {}) for t in range(trials)]
    return np.array(_run_tasks(_ser_task, tasks, workers), dtype=np.int64).reshape(-1, 4)


def run_detector_bench(spec: ExperimentSpec, out=None, slots: int | None = None) -> list[dict]:
    slots = slots or spec.base.data_length
    algo = spec.base.algo
    amp_kw = {"max_iters": algo.amp_max_iters, "damping": algo.amp_damping, "form": algo.amp_form}
    rows = []
    for v in spec.values:
        m, k, snr = _point_mk(spec, v)
        res = paired_ser_trials(m, k, snr, slots, spec.seed, spec.trials, amp_kw, spec.workers)
        n = int(res[:, 2].sum())
        for name, col in (("amp", 0), ("mmse", 1)):
            errors = int(res[:, col].sum())
            rows.append({
                "M": m, "K": k, "snr_db": float(snr), "detector": name,
                "trials": spec.trials, "decisions": n, "errors": errors, "ser": errors / n,
            })
    return write_csv(out, SER_HEADER, rows)


# ----------------------------------------------------------- factor bench


def _factor_task(args):
    cfg, k, snr_db, seed, trial, distinct = args
    books = build_codebooks(cfg)
    code = PolarCode(cfg.fec)
    rng = substream(seed, "factor-bench", trial)
    if k == 0:
        return 0, 0, 0.0, 0.0, 0
    messages = sample_messages(cfg, rng, k)
    if distinct:
        pilots = rng.choice(cfg.n_pilots, size=k, replace=False)
        bits = messages.bits.copy()
        bits[:, cfg.chunk_bits : cfg.chunk_bits + cfg.pilot_bits] = int_to_bits(pilots, cfg.pilot_bits)
        messages = message_set(bits, cfg)
    frames = encode_messages(messages, books, code)
    energy = books.budget.total
    noise_var = 0.0 if math.isinf(snr_db) else k * energy / (cfg.chunk_length * 10 ** (snr_db / 10))
    H = draw_channel(cfg.antennas, k, rng)
    scene = build_chunk_scene(frames.frames, H, noise_var, rng)
    algo = cfg.algo
    try:
        fit = factorize(
            scene.Y, books.pilots, k,
            reg_u=algo.reg_u, reg_v=algo.reg_v, max_iters=algo.altmin_max_iters,
            tol=algo.altmin_tol, rng=rng, rank_aware=algo.somp_rank_aware,
        )
    except ChunkFailure:
        return k, 0, float(np.linalg.norm(scene.X) ** 2), float(np.linalg.norm(scene.X) ** 2), 1
    recovered, err = frame_alignment(frames.pilot_index, fit.support, scene.X, fit.Xhat)
    return k, recovered, err, float(np.linalg.norm(scene.X) ** 2), 0


def frame_alignment(true_pilots, support, X, Xhat) -> tuple[int, float]:
    """Match estimated rows to users by pilot index.

    Users sharing a pilot are all counted as unrecovered.  Returns the number
    of recovered users and the squared frame error with unrecovered users
    contributing their full energy.
    """
    true_pilots = np.asarray(true_pilots)
    ids, counts = np.unique(true_pilots, return_counts=True)
    unique = set(ids[counts == 1].tolist())
    row_of = {int(p): i for i, p in enumerate(support)}
    recovered = 0
    err = 0.0
    for user, pilot in enumerate(true_pilots.tolist()):
        if pilot in unique and pilot in row_of:
            recovered += 1
            err += float(np.linalg.norm(Xhat[row_of[pilot]] - X[user]) ** 2)
        else:
            err += float(np.linalg.norm(X[user]) ** 2)
    return recovered, err


def run_factor_bench(spec: ExperimentSpec, out=None) -> list[dict]:
    rows = []
    for v in spec.values:
        m, k, snr = _point_mk(spec, v)
        cfg = spec.base.replace(antennas=m)
        tasks = [(cfg, k, snr, spec.seed, t, spec.distinct_pilots) for t in range(spec.trials)]
        res = _run_tasks(_factor_task, tasks, spec.workers)
        users = sum(r[0] for r in res)
        recovered = sum(r[1] for r in res)
        err = sum(r[2] for r in res)
        energy = sum(r[3] for r in res)
        rows.append({
            "M": m, "T": cfg.chunk_length, "K": k, "snr_db": float(snr), "trials": spec.trials,
            "support_recovery": recovered / users if users else 1.0,
            "frame_error": math.sqrt(err / energy) if energy else 0.0,
            "failures": sum(r[4] for r in res),
        })
    return write_csv(out, FACTOR_HEADER, rows)


def write_residual_history(path, residuals: Sequence[float]) -> None:
    write_csv(path, ["iter", "residual"], ({"iter": i, "residual": float(r)} for i, r in enumerate(residuals)))


RUNNERS = {"pupe": run_end_to_end, "ser": run_detector_bench, "factor": run_factor_bench}
