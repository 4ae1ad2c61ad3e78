"""Joint pattern and data detection on the data sub-frame.

Each slot ``y_t = H x_t + n_t`` is detected independently; the entries of
``x_t`` take values in the state set ``{0} U Q`` (idle or a QPSK symbol).  The
detectors below return per-(user, slot) posteriors over that state set and
are vectorized across slots, so a whole data sub-frame is one call.

State axis order: index 0 is the idle state, indices 1..4 are the QPSK
symbols in Gray-label order (00, 01, 10, 11).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codebooks import ModulationAlphabet, PatternCodebook
from .counters import ComplexityCounters

TAU_FLOOR = 1e-12
LLR_CLAMP = 30.0


@dataclass
class Detection:
    posteriors: np.ndarray  # (K, Tc, S), sums to one over S
    failed: np.ndarray  # (Tc,) bool, slot fell back to the prior
    taus: np.ndarray | None = None  # (iters, Tc) effective-variance trace (AMP)


def state_prior(alphabet: ModulationAlphabet, mode: str = "uniform", activity: float | None = None) -> np.ndarray:
    """Prior weights over {0} U Q.

    ``uniform`` puts equal mass on every state; ``sparse`` gives the idle
    state ``1 - activity`` and splits ``activity`` over the constellation.
    """
    q = alphabet.order
    if mode == "uniform":
        return np.full(q + 1, 1.0 / (q + 1))
    if mode == "sparse":
        if activity is None or not 0 < activity < 1:
            raise ValueError("sparse prior needs an activity level in (0, 1)")
        return np.concatenate([[1 - activity], np.full(q, activity / q)])
    raise ValueError(f"unknown prior mode {mode!r}")


def state_moments(states: np.ndarray, prior: np.ndarray) -> tuple[complex, float]:
    mean = np.sum(prior * states)
    var = float(np.sum(prior * np.abs(states) ** 2) - np.abs(mean) ** 2)
    return mean, var


def _posterior(s, var, states, log_prior, width: float = 1.0) -> np.ndarray:
    """Weights proportional to prior * exp(-|s - s_i|^2 / (width * var)), normalized."""
    dist = np.abs(s[..., None] - states) ** 2
    logits = log_prior - dist / (width * var[..., None])
    logits -= logits.max(axis=-1, keepdims=True)
    w = np.exp(logits)
    return w / w.sum(axis=-1, keepdims=True)


def amp_detect(
    Y: np.ndarray,
    H: np.ndarray,
    noise_var: float,
    states: np.ndarray,
    prior: np.ndarray | None = None,
    max_iters: int = 20,
    damping: float = 0.0,
    counters: ComplexityCounters | None = None,
    form: str = "matched",
) -> Detection:
    """AMP detection of every column of ``Y`` (M x Tc) given channel ``H`` (M x K).

    Per iteration and slot::

        s     = x + H^H r / M
        x'    = E[x | s],  effective variance v = noise_var (1/M + tau)
        tau'  = (K/M) / noise_var * mean_k Var[x | s]
        r'    = y - H x' + tau' / (c + tau) r

    starting from ``x = 0``, ``r = y`` and ``tau = Var[state] / noise_var``.
    The returned posteriors are those of the final iteration.

    ``form="matched"`` uses ``c = 1/M`` and state weights
    ``exp(-|s - s_i|^2 / v)``, which is the Onsager coefficient and circular
    Gaussian likelihood that match the ``H^H r / M`` matched filter for a
    channel with unit-variance entries.  ``form="literal"`` uses ``c = 1`` and
    weights ``exp(-|s - s_i|^2 / (2 v))``.
    """
    if form not in ("matched", "literal"):
        raise ValueError(f"unknown AMP form {form!r}")
    width = 2.0 if form == "literal" else 1.0
    Y = np.asarray(Y, dtype=complex)
    if Y.ndim == 1:
        Y = Y[:, None]
    m, tc = Y.shape
    k = H.shape[1]
    n_states = len(states)
    prior = np.full(n_states, 1.0 / n_states) if prior is None else np.asarray(prior, float)
    log_prior = np.log(prior)
    _, var_s = state_moments(states, prior)
    load = k / m
    Hh = H.conj().T

    x = np.zeros((k, tc), dtype=complex)
    r = Y.copy()
    base = 1.0 if form == "literal" else 1.0 / m
    tau = np.full(tc, var_s / noise_var)
    post = np.broadcast_to(prior, (k, tc, n_states)).copy()
    taus = []
    failed = np.zeros(tc, dtype=bool)
    for _ in range(max_iters):
        s = x + (Hh @ r) / m
        v = np.maximum(noise_var * (1.0 / m + tau), TAU_FLOOR)
        post = _posterior(s, np.broadcast_to(v, s.shape), states, log_prior, width)
        x_new = post @ states
        var_x = post @ (np.abs(states) ** 2) - np.abs(x_new) ** 2
        if damping:
            x_new = (1 - damping) * x_new + damping * x
        tau_new = load / noise_var * var_x.mean(axis=0)
        r = Y - H @ x_new + (tau_new / (base + tau)) * r
        x, tau = x_new, tau_new
        taus.append(tau.copy())
        if counters is not None:
            counters.add("amp", tc * (2 * m * k + 3 * k * n_states))
        bad = ~(np.isfinite(r).all(axis=0) & np.isfinite(x).all(axis=0) & np.isfinite(tau))
        if bad.any():
            failed |= bad
            r[:, bad] = 0
            x[:, bad] = 0
            tau[bad] = var_s / noise_var
    post[:, failed, :] = prior
    return Detection(posteriors=post, failed=failed, taus=np.array(taus))


def mmse_detect(
    Y: np.ndarray,
    H: np.ndarray,
    noise_var: float,
    states: np.ndarray,
    prior: np.ndarray | None = None,
    counters: ComplexityCounters | None = None,
) -> Detection:
    """Linear MMSE baseline followed by per-user Gaussian demapping.

    The LMMSE output is debiased per user (``x_k / mu_k``) and demapped with
    the residual variance ``prior_var (1 - mu_k) / mu_k``.
    """
    Y = np.asarray(Y, dtype=complex)
    if Y.ndim == 1:
        Y = Y[:, None]
    m, tc = Y.shape
    k = H.shape[1]
    n_states = len(states)
    prior = np.full(n_states, 1.0 / n_states) if prior is None else np.asarray(prior, float)
    _, prior_var = state_moments(states, prior)
    gram = H.conj().T @ H + (noise_var / prior_var) * np.eye(k)
    if np.linalg.cond(gram) > 1e12:
        post = np.broadcast_to(prior, (k, tc, n_states)).copy()
        return Detection(posteriors=post, failed=np.ones(tc, dtype=bool))
    W = np.linalg.solve(gram, H.conj().T)
    mu = np.clip(np.real(np.einsum("ij,ji->i", W, H)), 1e-12, 1 - 1e-12)
    est = (W @ Y) / mu[:, None]
    err_var = prior_var * (1 - mu) / mu
    if counters is not None:
        counters.add("mmse", k * k * m + k**3 + k * k * m + tc * m * k)
    post = _posterior(est, np.broadcast_to(err_var[:, None], est.shape), states, np.log(prior))
    return Detection(posteriors=post, failed=np.zeros(tc, dtype=bool))


def hard_states(posteriors: np.ndarray) -> np.ndarray:
    return np.argmax(posteriors, axis=-1)


def retrieve_patterns(
    posteriors: np.ndarray, patterns: PatternCodebook, floor: float = 1e-30
) -> tuple[np.ndarray, np.ndarray]:
    """Most likely on-off pattern per user.

    ``posteriors`` is (K, Tc, S) or (Tc, S).  A pattern's score is the sum of
    log P(active) over its on-slots plus log P(idle) over its off-slots.
    Returns (pattern index, margin to runner-up); ties go to the lower index.
    """
    single = posteriors.ndim == 2
    post = posteriors[None] if single else posteriors
    p_idle = post[..., 0]
    log_idle = np.log(np.maximum(p_idle, floor))
    log_active = np.log(np.maximum(1.0 - p_idle, floor))
    scores = log_idle.sum(axis=1, keepdims=True) + (log_active - log_idle) @ patterns.matrix
    best = np.argmax(scores, axis=1)
    rows = np.arange(len(best))
    top = scores[rows, best]
    if scores.shape[1] > 1:
        scores[rows, best] = -np.inf
        margin = top - scores.max(axis=1)
    else:
        margin = np.full(len(best), np.inf)
    if single:
        return best[0], margin[0]
    return best, margin


def extract_llrs(posteriors: np.ndarray, pattern_index, patterns: PatternCodebook) -> np.ndarray:
    """Bit LLRs (log P(b=0)/P(b=1)) for the on-slots of the chosen pattern.

    Works on (Tc, S) with a scalar index or (K, Tc, S) with one index per
    user; output is (2 Ns,) or (K, 2 Ns) in symbol order, b0 before b1.
    """
    single = posteriors.ndim == 2
    post = posteriors[None] if single else posteriors
    idx = np.atleast_1d(pattern_index)
    slots = patterns.support[idx]  # (K, Ns) ascending
    q = np.take_along_axis(post, slots[..., None], axis=1)[..., 1:]
    q = q / np.maximum(q.sum(axis=-1, keepdims=True), 1e-300)
    p00, p01, p10, p11 = (np.maximum(q[..., i], 1e-300) for i in range(4))
    llr0 = np.log(p00 + p01) - np.log(p10 + p11)
    llr1 = np.log(p00 + p10) - np.log(p01 + p11)
    llrs = np.clip(np.stack([llr0, llr1], axis=-1).reshape(len(idx), -1), -LLR_CLAMP, LLR_CLAMP)
    return llrs[0] if single else llrs
