"""Dense recovery diagnostics for small instances.

Given the dense lifted matrix ``A`` (``L x kN``) and a block support ``S``,
these compute the isometry defect, block cross-coherence, the exact dual
certificate and the resulting sufficient-condition verdict. Everything here
is guarded to ``kN <= 4096``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .liftops import DENSE_LIMIT, LiftedOperator, SubspaceBasis, materialize_dense
from .transforms import Sparsifier


@dataclass(frozen=True)
class IncoherenceConstants:
    mu_B_sqrtL: float
    mu_B_sqrtN: float
    mu_Psi: float


@dataclass(frozen=True)
class CertificateReport:
    delta: float
    beta: float
    eta: float
    theta: float
    tau_times_sqrt_s: float
    rho: float
    verdict: bool
    eta_measured: float = 0.0
    certificate_norm_bound: float = float("inf")
    cross_coherence_bound: float = float("nan")

    def to_text(self) -> str:
        """``key=value`` lines for logs."""
        lines = []
        for key, val in asdict(self).items():
            if isinstance(val, bool):
                val = str(val).lower()
            elif isinstance(val, float):
                val = repr(val)
            lines.append(f"{key}={val}")
        return "\n".join(lines) + "\n"


def incoherence_constants(B: SubspaceBasis | np.ndarray, psi: Sparsifier | np.ndarray,
                          L: int) -> IncoherenceConstants:
    """``sqrt(L) max|B|``, ``sqrt(N) max|B|`` and ``sqrt(N) max|Psi|``."""
    Bm = B.B if isinstance(B, SubspaceBasis) else np.asarray(B)
    P = psi.matrix() if isinstance(psi, Sparsifier) else np.asarray(psi)
    N = Bm.shape[0]
    if P.shape != (N, N):
        raise ValueError(f"Psi must be {N}x{N}, got {P.shape}")
    if L < 1:
        raise ValueError("L must be positive")
    bmax = float(np.max(np.abs(Bm)))
    return IncoherenceConstants(np.sqrt(L) * bmax, np.sqrt(N) * bmax,
                                float(np.sqrt(N) * np.max(np.abs(P))))


def dense_operator(op: LiftedOperator, normalized: bool = False) -> np.ndarray:
    """Dense ``A``; with ``normalized`` it is scaled by ``sqrt(N)``.

    For an orthonormal ``B`` and a flat ``Psi`` every column of ``A`` has
    expected squared norm ``1/N``, so the raw isometry defect sits close to 1.
    The scaled matrix has ``E[A_S^* A_S] = I``. The certificate ``Y``, ``theta``
    and uniqueness do not depend on this scale; ``delta``, ``beta`` and ``||V||``
    do.
    """
    A = materialize_dense(op)
    return A * np.sqrt(op.N) if normalized else A


def _check_dense(A: np.ndarray, k: int) -> tuple[int, int]:
    A = np.asarray(A)
    if A.ndim != 2:
        raise ValueError("A must be a 2-D matrix")
    kN = A.shape[1]
    if kN > DENSE_LIMIT:
        raise ValueError(f"kN = {kN} exceeds the dense limit {DENSE_LIMIT}")
    if kN % k:
        raise ValueError(f"A has {kN} columns, not a multiple of k={k}")
    return kN // k, kN


def _cols(S, k: int) -> np.ndarray:
    S = np.asarray(S, dtype=np.int64).ravel()
    if S.size == 0:
        return np.zeros(0, dtype=np.int64)
    return (S[:, None] * k + np.arange(k)[None, :]).ravel()


def _support(S, N: int) -> np.ndarray:
    S = np.unique(np.asarray(S, dtype=np.int64).ravel())
    if S.size and (S[0] < 0 or S[-1] >= N):
        raise ValueError(f"support indices must lie in [0, {N})")
    return S


def isometry_defect(A: np.ndarray, S, k: int) -> float:
    """``||A_S^* A_S - I||_2`` over the ``k|S|`` columns of the support blocks."""
    N, _ = _check_dense(A, k)
    S = _support(S, N)
    if S.size == 0:
        return 0.0
    AS = A[:, _cols(S, k)]
    G = AS.conj().T @ AS - np.eye(AS.shape[1])
    return float(np.max(np.abs(np.linalg.eigvalsh(G))))


def block_cross_coherence(A: np.ndarray, S, k: int) -> float:
    """``max_{j not in S} ||A_S^* A_{T_j}||_2`` (0 when ``S`` covers every block)."""
    N, _ = _check_dense(A, k)
    S = _support(S, N)
    off = np.setdiff1d(np.arange(N), S)
    if S.size == 0 or off.size == 0:
        return 0.0
    AS = A[:, _cols(S, k)]
    best = 0.0
    for j in off:
        M = AS.conj().T @ A[:, j * k:(j + 1) * k]
        best = max(best, float(np.linalg.norm(M, 2)))
    return best


def cross_coherence_bound(defect: float, L: int, mu_psi: float) -> float:
    """Predicted ceiling ``sqrt((1 + defect) / L) * mu_Psi`` on the block cross-coherence."""
    return float(np.sqrt((1.0 + defect) / L) * mu_psi)


def certificate_norm_bound(defect: float, n: int) -> float:
    """``sqrt(1 + defect) / (1 - defect) * sqrt(n)``, an upper bound on ``||V||_F``."""
    if defect >= 1.0:
        return float("inf")
    return float(np.sqrt(1.0 + defect) / (1.0 - defect) * np.sqrt(n))


def block_sign(X0: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Support and block-normalized sign of a lifted matrix."""
    X0 = np.asarray(X0, dtype=np.complex128)
    if X0.ndim == 1:
        X0 = X0[:, None]
    blocks = X0.reshape(X0.shape[0] // k, k, X0.shape[1])
    nrm = np.sqrt(np.sum(np.abs(blocks) ** 2, axis=(1, 2)))
    S = np.flatnonzero(nrm > 0)
    sgn = np.zeros_like(blocks)
    sgn[S] = blocks[S] / nrm[S, None, None]
    return S, sgn.reshape(X0.shape)


def recovery_verdict(report: CertificateReport | None = None, *, delta: float | None = None,
                     theta: float | None = None, eta: float = 0.0, beta: float = 0.0) -> bool:
    """``delta < 1`` and ``rho = theta + eta * beta / (1 - delta) < 1``."""
    if report is not None:
        delta, theta, eta, beta = report.delta, report.theta, report.eta, report.beta
    if delta is None or theta is None:
        raise ValueError("need a report or explicit delta and theta")
    if not delta < 1.0:
        return False
    return bool(theta + eta * beta / (1.0 - delta) < 1.0)


def exact_dual_certificate(A: np.ndarray, S, sgn: np.ndarray, k: int, mu_psi: float | None = None
                           ) -> tuple[np.ndarray, np.ndarray, CertificateReport]:
    """Least-norm certificate ``V = A_S (A_S^* A_S)^{-1} sgn_S`` and ``Y = A^* V``.

    ``sgn`` is the ``kN x C`` block sign of ``X_0`` (see :func:`block_sign`).
    The report sets ``eta = 0`` (exact interpolation) and records the measured
    on-support mismatch separately.
    """
    N, kN = _check_dense(A, k)
    S = _support(S, N)
    sgn = np.asarray(sgn, dtype=np.complex128)
    if sgn.ndim == 1:
        sgn = sgn[:, None]
    if sgn.shape[0] != kN:
        raise ValueError(f"sign matrix must have {kN} rows, got {sgn.shape}")
    L = A.shape[0]
    if S.size == 0:
        raise ValueError("empty support")
    cols = _cols(S, k)
    if cols.size > L:
        raise ValueError(f"support needs {cols.size} columns but only {L} measurements")
    AS = A[:, cols]
    G = AS.conj().T @ AS
    ev = np.linalg.eigvalsh(G)
    if ev[0] <= 1e-12 * max(ev[-1], 1e-300):
        raise np.linalg.LinAlgError("A_S^* A_S is singular")
    delta = float(np.max(np.abs(ev - 1.0)))
    V = AS @ np.linalg.solve(G, sgn[cols])
    Ycert = A.conj().T @ V
    blocks = Ycert.reshape(N, k, -1)
    off = np.setdiff1d(np.arange(N), S)
    theta = float(np.max(np.sqrt(np.sum(np.abs(blocks[off]) ** 2, axis=(1, 2))))) if off.size else 0.0
    eta_meas = float(np.linalg.norm(Ycert[cols] - sgn[cols]))
    beta = block_cross_coherence(A, S, k)
    tau = float(np.linalg.norm(V))
    rho = theta  # eta = 0 for the exact certificate
    verdict = recovery_verdict(delta=delta, theta=theta, eta=0.0, beta=beta)
    rep = CertificateReport(
        delta=delta, beta=beta, eta=0.0, theta=theta, tau_times_sqrt_s=tau, rho=rho,
        verdict=verdict, eta_measured=eta_meas, certificate_norm_bound=certificate_norm_bound(delta, S.size),
        cross_coherence_bound=cross_coherence_bound(delta, L, mu_psi) if mu_psi is not None else float("nan"),
    )
    return V, Ycert, rep


def certify(op: LiftedOperator, X0: np.ndarray, normalized: bool = False
            ) -> tuple[np.ndarray, np.ndarray, CertificateReport]:
    """Certificate report for the lifted ground truth ``X0`` under ``op``."""
    A = dense_operator(op, normalized)
    S, sgn = block_sign(X0, op.k)
    mu = incoherence_constants(op.basis, op.psi, op.L).mu_Psi
    return exact_dual_certificate(A, S, sgn, op.k, mu_psi=mu)
