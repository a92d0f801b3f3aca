"""Recover the signal and coil coefficients from a lifted solution.

A lifted estimate ``X`` (``kN x C``) should be close to ``z kron H``. Averaging
its columns gives ``vec(mean(h_i) z^T)``; the best rank-one approximation of
that ``k x N`` matrix recovers ``z`` up to a complex scalar.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .transforms import Sparsifier

logger = logging.getLogger(__name__)

# relative size below which the coil mean is treated as cancelled out
DEGENERATE_MEAN = 1e-8


@dataclass(frozen=True)
class RankOneFactors:
    sigma: float
    u: np.ndarray
    v: np.ndarray

    def matrix(self) -> np.ndarray:
        return self.sigma * np.outer(self.u, self.v)


@dataclass(frozen=True)
class RecoveredSignal:
    z: np.ndarray
    x: np.ndarray
    coil_coeffs: np.ndarray
    sigma: float
    used_fallback: bool = False


def _as_lifted(X: np.ndarray, k: int) -> np.ndarray:
    X = np.asarray(X, dtype=np.complex128)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] % k:
        raise ValueError(f"lifted matrix rows ({X.shape[0]}) must be a multiple of k={k}")
    return X


def average_reshape(X: np.ndarray, k: int) -> np.ndarray:
    """Column mean of ``X`` reshaped to ``k x N`` (entry ``(l, j)`` is row ``j*k + l``)."""
    X = _as_lifted(X, k)
    if X.shape[1] < 1:
        raise ValueError("lifted matrix has no columns")
    m = X.mean(axis=1)
    return m.reshape(-1, k).T


def best_rank_one(M: np.ndarray, max_iters: int = 200, tol: float = 1e-14) -> RankOneFactors:
    """Top singular triple of ``M`` by power iteration on the ``k x k`` Gram ``M M^*``.

    For ``M = 0`` returns ``sigma = 0`` with ``u = e_0`` and ``v = e_0``. When
    the top singular value is repeated, the triple returned is one member of
    the top singular subspace (which member depends on the start vector).
    """
    M = np.asarray(M, dtype=np.complex128)
    if M.ndim != 2 or min(M.shape) < 1:
        raise ValueError(f"expected a nonempty 2-D matrix, got shape {M.shape}")
    k, N = M.shape
    e_k = np.zeros(k, dtype=np.complex128)
    e_k[0] = 1.0
    e_N = np.zeros(N, dtype=np.complex128)
    e_N[0] = 1.0
    G = M @ M.conj().T
    if not np.any(G):
        return RankOneFactors(0.0, e_k, e_N)
    # deterministic start: the row of M with the largest energy direction
    u = G[:, int(np.argmax(np.real(np.diag(G))))].copy()
    u /= np.linalg.norm(u)
    lam = 0.0
    for _ in range(max_iters):
        w = G @ u
        nw = np.linalg.norm(w)
        if nw == 0.0:
            break
        w /= nw
        new = float(np.real(np.vdot(w, G @ w)))
        done = abs(new - lam) <= tol * abs(new)
        u, lam = w, new
        if done:
            break
    Mu = M.conj().T @ u
    sigma = float(np.linalg.norm(Mu))
    if sigma == 0.0:
        return RankOneFactors(0.0, e_k, e_N)
    v = (Mu / sigma).conj()
    return RankOneFactors(sigma, u, v)


def phase_align(v: np.ndarray) -> np.ndarray:
    """Scale ``v`` to unit norm with its largest-magnitude entry real positive.

    Ties in magnitude go to the lowest index.
    """
    v = np.asarray(v, dtype=np.complex128)
    nrm = np.linalg.norm(v)
    if nrm == 0:
        raise ValueError("cannot normalize a zero vector")
    v = v / nrm
    j = int(np.argmax(np.abs(v)))  # argmax returns the first maximum
    return v * (np.abs(v[j]) / v[j])


def recover_signal(X: np.ndarray, psi: Sparsifier, k: int) -> RecoveredSignal:
    """Estimate ``z`` (unit norm, phase aligned) and ``x = Psi^* z`` from ``X``.

    If the column mean nearly cancels (``||mean|| <= 1e-8 * max column norm``)
    the rank-one factor is taken from the ``kC x N`` stack of all per-coil
    ``k x N`` reshapes instead, and ``used_fallback`` is set.
    """
    X = _as_lifted(X, k)
    N = X.shape[0] // k
    if N != psi.N:
        raise ValueError(f"lifted matrix is for N={N}, sparsifier grid has N={psi.N}")
    colmax = float(np.max(np.linalg.norm(X, axis=0)))
    if colmax == 0.0:
        raise ValueError("cannot recover a signal from a zero lifted matrix")
    Mbar = average_reshape(X, k)
    fallback = np.linalg.norm(Mbar) <= DEGENERATE_MEAN * colmax
    if fallback:
        logger.warning("coil mean nearly cancels; using the stacked unfolding")
        # stacking the per-coil k x N blocks gives vec(H) z^T, rank one in z
        U = X.reshape(N, k * X.shape[1]).T
        f = best_rank_one(U)
        z = phase_align(f.v)
    else:
        f = best_rank_one(Mbar)
        z = phase_align(f.v)
    # per-coil coefficients given z: h_i = X_i reshaped (k x N) times conj(z)
    H = np.stack([X[:, i].reshape(N, k).T @ z.conj() for i in range(X.shape[1])], axis=1)
    return RecoveredSignal(z, psi.inverse(z), H, f.sigma, bool(fallback))


def aligned_relative_error(a: np.ndarray, b: np.ndarray) -> float:
    """``min_alpha ||b - alpha a|| / ||b||`` over complex ``alpha``."""
    a = np.asarray(a, dtype=np.complex128).ravel()
    b = np.asarray(b, dtype=np.complex128).ravel()
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    nb = np.linalg.norm(b)
    if nb == 0:
        raise ValueError("reference vector is zero")
    na2 = float(np.real(np.vdot(a, a)))
    alpha = np.vdot(a, b) / na2 if na2 > 0 else 0.0
    return float(np.linalg.norm(b - alpha * a) / nb)


def lifted_relative_error(X: np.ndarray, X0: np.ndarray) -> float:
    X0 = np.asarray(X0)
    n0 = np.linalg.norm(X0)
    if n0 == 0:
        raise ValueError("reference lifted matrix is zero")
    return float(np.linalg.norm(np.asarray(X) - X0) / n0)
