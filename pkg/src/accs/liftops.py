"""The lifted measurement operator ``A = F_Omega Phi`` and its adjoint.

A lifted matrix ``X`` has shape ``(k*N, C)``; rows ``j*k .. (j+1)*k - 1`` form
block ``T_j``, so ``X.reshape(N, k, C)[j]`` is the ``k x C`` block of grid
location ``j``. For a rank-one lift ``X = z kron H`` that block is ``z[j] * H``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .transforms import (
    GridShape,
    SamplingPattern,
    Sparsifier,
    SparsifierKind,
    partial_fourier_adjoint,
    partial_fourier_apply,
)

logger = logging.getLogger(__name__)

DENSE_LIMIT = 4096
NORM_SAFETY = 1.05


@dataclass(frozen=True)
class SubspaceBasis:
    """Tall ``N x k`` matrix with orthonormal columns spanning the coil profiles."""

    B: np.ndarray
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        B = np.array(self.B, dtype=np.complex128)
        if B.ndim != 2:
            raise ValueError(f"subspace basis must be 2-D, got shape {B.shape}")
        N, k = B.shape
        if k < 1:
            raise ValueError("subspace dimension k must be at least 1")
        if k >= N and N > 1:
            raise ValueError(f"subspace dimension k={k} must be smaller than N={N}")
        if self.check:
            gram_err = np.abs(B.conj().T @ B - np.eye(k)).max()
            if gram_err > 1e-10:
                raise ValueError(f"basis columns are not orthonormal (max |B*B - I| = {gram_err:.2e})")
        B.flags.writeable = False
        object.__setattr__(self, "B", B)

    @property
    def N(self) -> int:
        return self.B.shape[0]

    @property
    def k(self) -> int:
        return self.B.shape[1]


def lift(z: np.ndarray, H: np.ndarray) -> np.ndarray:
    """Rank-one lifted matrix ``z kron H`` of shape ``(k*N, C)``."""
    z = np.asarray(z, dtype=np.complex128).ravel()
    H = np.asarray(H, dtype=np.complex128)
    if H.ndim == 1:
        H = H[:, None]
    return np.kron(z[:, None], H)


def block_view(X: np.ndarray, k: int) -> np.ndarray:
    """``(N, k, C)`` view of a lifted matrix."""
    X = np.asarray(X)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] % k:
        raise ValueError(f"row count {X.shape[0]} is not a multiple of k={k}")
    return X.reshape(X.shape[0] // k, k, X.shape[1])


class LiftedOperator:
    """Implicit ``A = F_Omega Phi`` mapping ``C^(kN x C) -> C^(L x C)``.

    ``Phi`` acts on one lifted column ``x`` (length ``kN``) as
    ``sum_l B[:, l] * (Psi^* m_l)`` where ``m_l`` gathers the ``l``-th entry of
    every length-``k`` block. Both directions cost ``O(k N log N)`` per column.
    """

    def __init__(self, basis: SubspaceBasis | np.ndarray, psi: Sparsifier, omega: SamplingPattern):
        if not isinstance(basis, SubspaceBasis):
            basis = SubspaceBasis(basis)
        if basis.N != psi.N:
            raise ValueError(f"basis has N={basis.N} rows but sparsifier grid has N={psi.N}")
        if omega.N != psi.N:
            raise ValueError(f"sampling pattern is for N={omega.N}, grid has N={psi.N}")
        self.basis = basis
        self.psi = psi
        self.omega = omega
        self._B = np.ascontiguousarray(basis.B)
        self._Bc = np.ascontiguousarray(basis.B.conj())
        self._norm_cache: dict = {}

    @property
    def shape(self) -> GridShape:
        return self.psi.shape

    @property
    def N(self) -> int:
        return self.psi.N

    @property
    def k(self) -> int:
        return self.basis.k

    @property
    def L(self) -> int:
        return self.omega.L

    def __repr__(self):
        return f"LiftedOperator(N={self.N}, k={self.k}, L={self.L}, psi={self.psi.kind.value})"

    def _as_lifted(self, X: np.ndarray) -> tuple[np.ndarray, bool]:
        X = np.asarray(X, dtype=np.complex128)
        vec = X.ndim == 1
        if vec:
            X = X[:, None]
        if X.ndim != 2 or X.shape[0] != self.k * self.N:
            raise ValueError(f"lifted input must have {self.k * self.N} rows, got shape {X.shape}")
        return X, vec

    def _fused_plan(self, C: int):
        if self.psi.kind is SparsifierKind.DCT2 and not self.shape.is_2d:
            return kernels.dct_plan(self.N, self.k * C)
        return None

    def phi(self, X: np.ndarray) -> np.ndarray:
        """``Phi X`` (no Fourier sampling); accepts a column or a ``(kN, C)`` matrix."""
        X, vec = self._as_lifted(X)
        C = X.shape[1]
        u = np.empty((self.N, C), dtype=np.complex128)
        M = np.ascontiguousarray(X).reshape(self.N, self.k, C)
        plan = self._fused_plan(C)
        if plan is not None:
            plan.idct_combine(self._B, M, u)
        else:
            W = np.ascontiguousarray(self.psi.inverse(M))
            kernels.get_backend().combine_basis(self._B, W, u)
        return u[:, 0] if vec else u

    def phi_adjoint(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=np.complex128)
        vec = u.ndim == 1
        if vec:
            u = u[:, None]
        if u.shape[0] != self.N:
            raise ValueError(f"expected {self.N} grid samples, got shape {u.shape}")
        W = np.empty((self.N, self.k, u.shape[1]), dtype=np.complex128)
        plan = self._fused_plan(u.shape[1])
        if plan is not None:
            M = plan.spread_dct(self._Bc, np.ascontiguousarray(u), W)
        else:
            kernels.get_backend().spread_basis(self._Bc, np.ascontiguousarray(u), W)
            M = self.psi.forward(W)
        X = M.reshape(self.k * self.N, u.shape[1])
        return X[:, 0] if vec else X

    def forward(self, X: np.ndarray) -> np.ndarray:
        X, vec = self._as_lifted(X)
        Y = partial_fourier_apply(self.phi(X), self.omega, self.shape)
        return Y[:, 0] if vec else Y

    def adjoint(self, Y: np.ndarray) -> np.ndarray:
        Y = np.asarray(Y, dtype=np.complex128)
        vec = Y.ndim == 1
        if vec:
            Y = Y[:, None]
        if Y.ndim != 2 or Y.shape[0] != self.L:
            raise ValueError(f"measurements must have {self.L} rows, got shape {Y.shape}")
        X = self.phi_adjoint(partial_fourier_adjoint(Y, self.omega, self.shape))
        return X[:, 0] if vec else X

    __matmul__ = forward


def phi_apply(xcol: np.ndarray, op: LiftedOperator) -> np.ndarray:
    xcol = np.asarray(xcol)
    if xcol.ndim != 1:
        raise ValueError("phi_apply expects a single lifted column")
    return op.phi(xcol)


def lifted_forward(X: np.ndarray, op: LiftedOperator) -> np.ndarray:
    return op.forward(X)


def lifted_adjoint(Y: np.ndarray, op: LiftedOperator) -> np.ndarray:
    return op.adjoint(Y)


def materialize_dense(op: LiftedOperator, limit: int = DENSE_LIMIT) -> np.ndarray:
    """Dense ``L x kN`` matrix of ``A``, built by applying ``A`` to the identity."""
    kN = op.k * op.N
    if kN > limit:
        raise ValueError(f"kN = {kN} exceeds the dense materialization limit {limit}")
    return op.forward(np.eye(kN, dtype=np.complex128))


def operator_norm_estimate(op: LiftedOperator, iters: int = 100, tol: float = 1e-6,
                           seed: int = 0) -> float:
    """Upper estimate of ``||A||_2^2`` by power iteration on ``A^* A``.

    The Rayleigh quotient after convergence is multiplied by ``1.05`` so that
    the result can be used directly as a FISTA Lipschitz constant.
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    key = (iters, tol, seed)
    if key in op._norm_cache:
        return op._norm_cache[key]
    rng = np.random.default_rng(seed)
    kN = op.k * op.N
    x = rng.standard_normal(kN) + 1j * rng.standard_normal(kN)
    x /= np.linalg.norm(x)
    est = 0.0
    for it in range(iters):
        y = op.adjoint(op.forward(x))
        new = float(np.vdot(x, y).real)
        nrm = np.linalg.norm(y)
        if nrm == 0.0:
            est = 0.0
            break
        x = y / nrm
        if it and abs(new - est) <= tol * abs(new):
            est = new
            break
        est = new
    # final Rayleigh quotient at the last normalized iterate
    est = max(est, float(np.linalg.norm(op.forward(x)) ** 2))
    logger.debug("power iteration: ||A||^2 ~ %.6g after %d iterations", est, it + 1)
    val = NORM_SAFETY * est
    op._norm_cache[key] = val
    return val
