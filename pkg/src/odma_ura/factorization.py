"""Activity estimation, low-rank factorization and ambiguity compensation.

The received chunk ``Y ~ H X`` is factored as ``U V`` by regularized
alternating least squares.  The factors are only defined up to an invertible
mixing ``G`` (``U = H G``, ``V = G^-1 X``); the pilot sub-frame of ``V`` is a
mixture of a few dictionary columns, so a joint-sparse greedy search (SOMP)
over the pilot dictionary recovers both the pilot indices and ``G``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .codebooks import PilotCodebook
from .counters import ComplexityCounters
from .rng import complex_normal


class ChunkFailure(RuntimeError):
    """A per-chunk numerical failure; the caller stops decoding the chunk."""


def estimate_activity(Y: np.ndarray, energy: float, noise_var: float) -> int:
    m, t = Y.shape
    raw = (np.vdot(Y, Y).real / m - noise_var * t) / energy
    return int(np.clip(np.floor(raw + 0.5), 0, min(m, t) - 1))


def altmin_objective(Y, U, V, reg_u, reg_v) -> float:
    r = Y - U @ V
    return float(
        np.vdot(r, r).real + reg_u * np.vdot(U, U).real + reg_v * np.vdot(V, V).real
    )


@dataclass
class AltMinResult:
    U: np.ndarray
    V: np.ndarray
    residuals: list[float] = field(default_factory=list)
    objectives: list[float] = field(default_factory=list)


def _checked_solve(gram: np.ndarray, rhs: np.ndarray, limit: float = 1e12) -> np.ndarray:
    if np.linalg.cond(gram) > limit:
        raise ChunkFailure("normal matrix is numerically singular")
    return np.linalg.solve(gram, rhs)


def alternating_minimize(
    Y: np.ndarray,
    rank: int,
    reg_u: float,
    reg_v: float,
    max_iters: int,
    tol: float,
    rng: np.random.Generator,
    counters: ComplexityCounters | None = None,
) -> AltMinResult:
    """Minimize ||Y - UV||^2 + reg_u ||U||^2 + reg_v ||V||^2 by exact block updates.

    Stops once the relative change of ||Y - UV||_F drops below ``tol``.
    """
    if rank < 1:
        raise ValueError("rank must be >= 1")
    m, t = Y.shape
    scale = np.sqrt(np.linalg.norm(Y) / (m * t))
    U = complex_normal(rng, (m, rank), scale**2)
    V = complex_normal(rng, (rank, t), scale**2)
    eye = np.eye(rank)
    y_norm = float(np.linalg.norm(Y))
    out = AltMinResult(U, V)
    prev = None
    for _ in range(max_iters):
        # U = Y V^H (V V^H + a I)^-1, solved on the Hermitian system
        U = _checked_solve(V @ V.conj().T + reg_u * eye, V @ Y.conj().T).conj().T
        V = _checked_solve(U.conj().T @ U + reg_v * eye, U.conj().T @ Y)
        resid = float(np.linalg.norm(Y - U @ V))
        out.residuals.append(resid)
        out.objectives.append(altmin_objective(Y, U, V, reg_u, reg_v))
        if counters is not None:
            k = rank
            counters.matmul("altmin", k, t, k)  # V V^H
            counters.matmul("altmin", k, t, m)  # V Y^H
            counters.add("altmin", k**3 + k * k * m)  # solve
            counters.matmul("altmin", k, m, k)  # U^H U
            counters.matmul("altmin", k, m, t)  # U^H Y
            counters.add("altmin", k**3 + k * k * t)  # solve
            counters.matmul("altmin", m, k, t)  # residual
        if resid <= 1e-13 * y_norm:
            break  # exact fit, nothing left to improve
        if prev is not None and abs(prev - resid) <= tol * prev:
            break
        prev = resid
    out.U, out.V = U, V
    return out


def somp_ambiguity(
    V: np.ndarray,
    pilots: PilotCodebook,
    rank: int,
    counters: ComplexityCounters | None = None,
    rank_aware: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """Greedy joint-sparse pilot recovery; returns (support, G) with X ~ G V.

    With ``rank_aware`` the residual is replaced by an orthonormal basis of its
    dominant subspace and each atom is scored against its component orthogonal
    to the atoms already chosen.  This removes the dependence of the scores on
    the unknown mixing ``G``.  ``rank_aware=False`` is the plain correlation
    rule ``||R^H a_i|| / ||a_i||``.
    """
    tp = pilots.matrix.shape[0]
    if V.shape[1] < tp:
        raise ValueError("V has fewer columns than the pilot length")
    if rank > tp:
        raise ChunkFailure("more active users than pilot dimensions")
    target = V[:, :tp].T  # (Tp, K)
    resid = target.copy()
    n = pilots.size
    atom_energy = np.linalg.norm(pilots.matrix, axis=0) ** 2
    captured = np.zeros(n)  # energy of each atom inside span(chosen)
    basis = np.zeros((tp, 0), dtype=complex)
    chosen: list[int] = []
    for step in range(rank):
        if rank_aware:
            u, _, _ = np.linalg.svd(resid, full_matrices=False)
            probe = u[:, : rank - step]
            corr = pilots.correlate(probe)
            denom = np.maximum(atom_energy - captured, 1e-9 * atom_energy)
            score = np.sum(np.abs(corr) ** 2, axis=1) / denom
        else:
            corr = pilots.correlate(resid)
            score = np.linalg.norm(corr, axis=1) / np.sqrt(atom_energy)
        score[chosen] = -np.inf
        pick = int(np.argmax(score))
        chosen.append(pick)
        xi = pilots.matrix[:, chosen]
        resid = target - xi @ np.linalg.lstsq(xi, target, rcond=None)[0]
        if rank_aware:
            a = pilots.matrix[:, pick]
            q = a - basis @ (basis.conj().T @ a)
            q /= np.linalg.norm(q)
            basis = np.column_stack([basis, q])
            captured += np.abs(pilots.correlate(q)) ** 2
        if counters is not None:
            cols = corr.shape[1] + (1 if rank_aware else 0)
            if pilots.rows is not None:
                counters.add("somp", int(cols * n * np.log2(n)))
            else:
                counters.matmul("somp", n, tp, cols)
            counters.add("somp", tp * len(chosen) * rank * 2)
    support = np.array(chosen, dtype=np.int64)
    a_s = pilots.matrix[:, support]
    g_tilde = np.linalg.pinv(a_s) @ target  # (K, K) nonzero rows of the sparse mixing
    if np.linalg.cond(g_tilde) > 1e8:
        raise ChunkFailure("ambiguity matrix is ill-conditioned")
    G = np.linalg.inv(g_tilde.T)
    return support, G


def compensate(U: np.ndarray, V: np.ndarray, G: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return U @ np.linalg.inv(G), G @ V


@dataclass
class FactorizationResult:
    activity: int
    U: np.ndarray
    V: np.ndarray
    G: np.ndarray
    support: np.ndarray  # pilot column per row of Xhat
    Hhat: np.ndarray
    Xhat: np.ndarray
    residuals: list[float]
    objectives: list[float]


def factorize(
    Y: np.ndarray,
    pilots: PilotCodebook,
    rank: int,
    *,
    reg_u: float,
    reg_v: float,
    max_iters: int,
    tol: float,
    rng: np.random.Generator,
    counters: ComplexityCounters | None = None,
    rank_aware: bool = True,
) -> FactorizationResult:
    fit = alternating_minimize(Y, rank, reg_u, reg_v, max_iters, tol, rng, counters)
    support, G = somp_ambiguity(fit.V, pilots, rank, counters, rank_aware)
    Hhat, Xhat = compensate(fit.U, fit.V, G)
    return FactorizationResult(
        activity=rank,
        U=fit.U,
        V=fit.V,
        G=G,
        support=support,
        Hhat=Hhat,
        Xhat=Xhat,
        residuals=fit.residuals,
        objectives=fit.objectives,
    )
