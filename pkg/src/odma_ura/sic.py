"""Per-chunk receiver: factorize, detect, decode, cancel, repeat."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .codebooks import Codebooks
from .config import SystemConfig
from .counters import ComplexityCounters
from .encoder import assemble_messages, build_frames
from .factorization import ChunkFailure, estimate_activity, factorize
from .fec import PolarCode
from .jpdd import amp_detect, extract_llrs, mmse_detect, retrieve_patterns, state_prior
from .rng import substream


@dataclass
class RoundStats:
    chunk: int
    round: int
    activity: int
    passers: int
    residual_energy: float


@dataclass
class SicState:
    residual: np.ndarray
    accepted: dict[bytes, np.ndarray] = field(default_factory=dict)
    round: int = 0

    @property
    def messages(self) -> np.ndarray:
        if not self.accepted:
            return np.zeros((0, 0), dtype=np.uint8)
        return np.stack(list(self.accepted.values()))


@dataclass
class DecodeOutcome:
    messages: np.ndarray  # (n, B) uint8
    rounds: list[RoundStats]
    counters: ComplexityCounters
    failure: str | None = None

    @property
    def passes(self) -> int:
        return len(self.rounds)


def refine_channel(Y: np.ndarray, X: np.ndarray, noise_var: float) -> np.ndarray | None:
    """Regularized LS channel ``Y X^H (X X^H + noise_var I)^-1``; None if ill-posed."""
    gram = X @ X.conj().T + noise_var * np.eye(X.shape[0])
    if np.linalg.cond(gram) > 1e10:
        return None
    return np.linalg.solve(gram, X @ Y.conj().T).conj().T


def subtract_and_update(
    state: SicState, H: np.ndarray, X: np.ndarray, newly: np.ndarray
) -> SicState:
    residual = state.residual - H @ X if len(X) else state.residual
    accepted = dict(state.accepted)
    for row in np.asarray(newly, dtype=np.uint8).reshape(len(X), -1):
        accepted.setdefault(row.tobytes(), row)
    return SicState(residual=residual, accepted=accepted, round=state.round + 1)


class ChunkReceiver:
    """Everything the receiver needs that does not change between chunks."""

    def __init__(self, cfg: SystemConfig, books: Codebooks, code: PolarCode | None = None):
        self.cfg = cfg
        self.books = books
        self.code = code or PolarCode(cfg.fec)
        activity = cfg.n_symbols / cfg.data_length
        mode = "sparse" if cfg.algo.amp_prior == "sparse" else "uniform"
        self.prior = state_prior(books.alphabet, mode, activity)

    def detect(self, Yc: np.ndarray, Hhat: np.ndarray, counters: ComplexityCounters):
        algo = self.cfg.algo
        states = self.books.alphabet.states
        if algo.detector == "mmse":
            return mmse_detect(Yc, Hhat, self.cfg.noise_var, states, self.prior, counters)
        return amp_detect(
            Yc,
            Hhat,
            self.cfg.noise_var,
            states,
            self.prior,
            max_iters=algo.amp_max_iters,
            damping=algo.amp_damping,
            counters=counters,
            form=algo.amp_form,
        )

    def decode_once(self, Y: np.ndarray, chunk: int, rank: int, rng, counters):
        """One pipeline pass; returns (messages, pilot, pattern, payload, Hhat rows)."""
        cfg, algo, books = self.cfg, self.cfg.algo, self.books
        fit = factorize(
            Y,
            books.pilots,
            rank,
            reg_u=algo.reg_u,
            reg_v=algo.reg_v,
            max_iters=algo.altmin_max_iters,
            tol=algo.altmin_tol,
            rng=rng,
            counters=counters,
            rank_aware=algo.somp_rank_aware,
        )
        det = self.detect(Y[:, cfg.pilot_length :], fit.Hhat, counters)
        pattern, _ = retrieve_patterns(det.posteriors, books.patterns, algo.pattern_prob_floor)
        llrs = extract_llrs(det.posteriors, pattern, books.patterns)
        res = self.code.decode(llrs)
        ok = res.valid
        msgs = assemble_messages(cfg, chunk, fit.support[ok], pattern[ok], res.payload[ok])
        return msgs, fit.support[ok], pattern[ok], res.payload[ok], fit.Hhat[:, ok]

    def run(self, Y: np.ndarray, chunk: int, seed: int, trial: int = 0) -> DecodeOutcome:
        cfg = self.cfg
        budget = self.books.budget
        counters = ComplexityCounters()
        state = SicState(residual=np.array(Y, dtype=complex))
        rounds: list[RoundStats] = []
        failure = None
        for rnd in range(cfg.algo.sic_max_rounds + 1):
            rank = estimate_activity(state.residual, budget.total, cfg.noise_var)
            if rank == 0:
                break
            rng = substream(seed, "altmin-init", trial, chunk, rnd)
            try:
                msgs, pilot, pattern, payload, hhat = self.decode_once(
                    state.residual, chunk, rank, rng, counters
                )
            except ChunkFailure as exc:
                failure = str(exc)
                break
            fresh = _first_occurrences(msgs, state.accepted)
            rounds.append(
                RoundStats(chunk, rnd, rank, int(fresh.sum()), float(np.vdot(state.residual, state.residual).real))
            )
            if not fresh.any():
                break
            msgs, pilot, pattern, payload, hhat = (
                msgs[fresh], pilot[fresh], pattern[fresh], payload[fresh], hhat[:, fresh]
            )
            if rnd == cfg.algo.sic_max_rounds:
                # last pass: keep the messages, no cancellation needed
                for row in msgs:
                    state.accepted.setdefault(row.tobytes(), row)
                break
            X = build_frames(pilot, pattern, payload, self.books, self.code)
            H = refine_channel(state.residual, X, cfg.noise_var)
            state = subtract_and_update(state, hhat if H is None else H, X, msgs)
        return DecodeOutcome(
            messages=state.messages if state.accepted else np.zeros((0, cfg.message_bits), np.uint8),
            rounds=rounds,
            counters=counters,
            failure=failure,
        )


def _first_occurrences(msgs: np.ndarray, accepted: dict) -> np.ndarray:
    seen = set(accepted)
    keep = np.zeros(len(msgs), dtype=bool)
    for i, row in enumerate(msgs):
        key = row.tobytes()
        if key not in seen:
            seen.add(key)
            keep[i] = True
    return keep
