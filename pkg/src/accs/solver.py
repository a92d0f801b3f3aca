"""Proximal-gradient solvers for the lifted recovery problem.

``fista_l12`` minimizes ``0.5 * ||Y - A X||_F^2 + lam * ||X||_{1,2}`` where the
mixed norm sums the Frobenius norms of the ``k x C`` row blocks of ``X``.
``solve_with_continuation`` drives ``lam`` geometrically towards zero to
approximate the equality-constrained minimum-norm solution. A known-calibration
OMP baseline is also provided.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import kernels
from .liftops import LiftedOperator, operator_norm_estimate
from .transforms import SamplingPattern, Sparsifier, partial_fourier_adjoint, partial_fourier_apply

logger = logging.getLogger(__name__)


class Regularizer(str, Enum):
    BLOCK_L12 = "block_l12"
    COLUMN_L2 = "column_l2"


class StepMode(str, Enum):
    POWER_ITERATION = "power_iteration"
    FIXED = "fixed"


@dataclass
class SolverConfig:
    """Options for :func:`fista_l12` and :func:`solve_with_continuation`.

    ``lambda_max_factor``, ``lambda_min_factor`` and ``stages`` define the
    continuation schedule relative to the smallest ``lam`` that zeroes the
    solution. ``lipschitz`` is only read when ``step_mode`` is ``"fixed"``.
    ``stage_tol`` loosens the stopping tolerance on every stage but the last
    (``None`` means use ``rel_change_tol`` throughout).
    """

    lam: float | None = None
    lambda_max_factor: float = 1.0
    lambda_min_factor: float = 1e-6
    stages: int = 10
    max_iters: int = 500
    rel_change_tol: float = 1e-10
    stage_tol: float | None = None
    step_mode: StepMode = StepMode.POWER_ITERATION
    lipschitz: float | None = None
    regularizer: Regularizer = Regularizer.BLOCK_L12
    power_iters: int = 100
    power_tol: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        self.step_mode = StepMode(self.step_mode)
        self.regularizer = Regularizer(self.regularizer)
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.stages < 1:
            raise ValueError("stages must be >= 1")
        if self.rel_change_tol <= 0:
            raise ValueError("rel_change_tol must be positive")
        if self.stage_tol is not None and self.stage_tol <= 0:
            raise ValueError("stage_tol must be positive")
        if self.lambda_max_factor <= 0 or self.lambda_min_factor <= 0:
            raise ValueError("lambda factors must be positive")
        if self.lam is not None and self.lam < 0:
            raise ValueError("lam must be nonnegative")
        if self.step_mode is StepMode.FIXED and not (self.lipschitz and self.lipschitz > 0):
            raise ValueError("fixed step mode needs a positive lipschitz constant")


@dataclass
class SolverResult:
    X: np.ndarray
    objective: list[float]
    iterations: int
    residual: float
    lambdas: list[float] = field(default_factory=list)
    stage_iterations: list[int] = field(default_factory=list)
    converged: bool = False


def block_l12_norm(X: np.ndarray, k: int) -> float:
    """Sum over the ``N`` row blocks (``k`` rows each) of their Frobenius norms."""
    X = np.asarray(X, dtype=np.complex128)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] % k:
        raise ValueError(f"row count {X.shape[0]} is not a multiple of k={k}")
    rows = np.ascontiguousarray(X).reshape(X.shape[0] // k, k * X.shape[1])
    return float(np.sum(kernels.get_backend().block_norms(rows)))


def column_l2_norm(X: np.ndarray) -> float:
    X = np.asarray(X, dtype=np.complex128)
    if X.ndim == 1:
        X = X[:, None]
    return float(np.sum(kernels.get_backend().column_norms(np.ascontiguousarray(X))))


def block_prox(Z: np.ndarray, tau: float, k: int) -> np.ndarray:
    """Block soft-thresholding: each ``k x C`` block is scaled by ``1 - tau/||Z_j||_F``
    or zeroed when its norm does not exceed ``tau``."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    Z = np.ascontiguousarray(Z, dtype=np.complex128)
    squeeze = Z.ndim == 1
    Z2 = Z[:, None] if squeeze else Z
    if Z2.shape[0] % k:
        raise ValueError(f"row count {Z2.shape[0]} is not a multiple of k={k}")
    rows = Z2.reshape(Z2.shape[0] // k, k * Z2.shape[1])
    out = np.empty_like(rows)
    kernels.get_backend().block_prox(rows, float(tau), out)
    out = out.reshape(Z2.shape)
    return out[:, 0] if squeeze else out


def column_prox(Z: np.ndarray, tau: float) -> np.ndarray:
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    Z = np.ascontiguousarray(Z, dtype=np.complex128)
    out = np.empty_like(Z)
    kernels.get_backend().column_prox(Z, float(tau), out)
    return out


def lambda_max(op: LiftedOperator, Y: np.ndarray,
               regularizer: Regularizer = Regularizer.BLOCK_L12) -> float:
    """Smallest ``lam`` for which ``X = 0`` solves the regularized problem."""
    G = np.ascontiguousarray(op.adjoint(np.asarray(Y, dtype=np.complex128).reshape(op.L, -1)))
    ker = kernels.get_backend()
    if Regularizer(regularizer) is Regularizer.COLUMN_L2:
        return float(np.max(ker.column_norms(G)))
    return float(np.max(ker.block_norms(G.reshape(op.N, -1))))


class _Problem:
    """Shared state for one ``(A, Y, regularizer)`` triple."""

    def __init__(self, op: LiftedOperator, Y: np.ndarray, cfg: SolverConfig):
        Y = np.asarray(Y, dtype=np.complex128)
        if Y.ndim == 1:
            Y = Y[:, None]
        if Y.ndim != 2 or Y.shape[0] != op.L:
            raise ValueError(f"measurements must have {op.L} rows, got shape {Y.shape}")
        if not np.all(np.isfinite(Y)):
            raise ValueError("measurements contain non-finite values")
        self.op = op
        self.Y = np.ascontiguousarray(Y)
        self.C = Y.shape[1]
        self.cfg = cfg
        self.ker = kernels.get_backend()
        self.block = cfg.regularizer is Regularizer.BLOCK_L12
        if cfg.step_mode is StepMode.FIXED:
            lip = float(cfg.lipschitz)
        else:
            lip = operator_norm_estimate(op, cfg.power_iters, cfg.power_tol, cfg.seed)
        if not np.isfinite(lip) or lip <= 0:
            raise RuntimeError(f"step size estimate failed (Lipschitz estimate {lip!r})")
        self.lip = lip
        self.kN = op.k * op.N

    def prox(self, W: np.ndarray, tau: float, out: np.ndarray) -> float:
        """Apply the prox into ``out``; returns the regularizer value of ``out``."""
        if self.block:
            return self.ker.block_prox(W.reshape(self.op.N, -1), tau, out.reshape(self.op.N, -1))
        return self.ker.column_prox(W, tau, out)

    def reg(self, X: np.ndarray) -> float:
        if self.block:
            return float(np.sum(self.ker.block_norms(X.reshape(self.op.N, -1))))
        return float(np.sum(self.ker.column_norms(X)))

    def forward(self, X):
        return np.ascontiguousarray(self.op.forward(X))

    def adjoint(self, R):
        return np.ascontiguousarray(self.op.adjoint(R))


def _fista(prob: _Problem, lam: float, X0: np.ndarray, AX0: np.ndarray, tol: float,
           max_iters: int):
    """Monotone FISTA with restart. Returns (X, AX, objective trace, iterations, converged)."""
    ker = prob.ker
    step = 1.0 / prob.lip
    tau = lam * step
    Y = prob.Y

    X = X0.copy()
    AX = AX0.copy()
    Xprev = X.copy()
    AXprev = AX.copy()
    F = 0.5 * ker.residual_sq(AX, Y) + lam * prob.reg(X)
    trace = [F]
    t = 1.0
    momentum = False
    Z = np.empty_like(X)
    AZ = np.empty_like(AX)
    W = np.empty_like(X)
    Xn = np.empty_like(X)
    converged = False
    it = 0
    while it < max_iters:
        it += 1
        if momentum:
            t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            beta = (t - 1.0) / t_next
            ker.extrapolate(X, Xprev, beta, Z)
            ker.extrapolate(AX, AXprev, beta, AZ)  # A is linear
        else:
            t_next = 1.0
            Z[...] = X
            AZ[...] = AX
        G = prob.adjoint(AZ - Y)
        ker.gradient_step(Z, G, step, W)
        reg = prob.prox(W, tau, Xn)
        AXn = prob.forward(Xn)
        Fn = 0.5 * ker.residual_sq(AXn, Y) + lam * reg
        if Fn > F and momentum:
            # restart: drop momentum and take a plain proximal-gradient step from X
            G = prob.adjoint(AX - Y)
            ker.gradient_step(X, G, step, W)
            reg = prob.prox(W, tau, Xn)
            AXn = prob.forward(Xn)
            Fn = 0.5 * ker.residual_sq(AXn, Y) + lam * reg
            t_next = 1.0
        if Fn > F:
            # only rounding can make a plain step ascend; X is already stationary
            converged = True
            break
        dx, nx = ker.diff_and_norm(Xn, X)
        Xprev, X, Xn = X, Xn, Xprev
        AXprev, AX = AX, AXn
        F = Fn
        trace.append(F)
        t = t_next
        momentum = True
        if dx <= tol * nx or nx == 0.0:
            converged = True
            break
    return X, AX, trace, it, converged


def fista_l12(op: LiftedOperator, Y: np.ndarray, lam: float, cfg: SolverConfig | None = None,
              X0: np.ndarray | None = None) -> SolverResult:
    """FISTA for ``min 0.5 ||Y - A X||_F^2 + lam * R(X)``.

    ``R`` is the block l1,2 norm by default (``cfg.regularizer`` selects the
    column-norm baseline). Momentum is reset whenever the objective would
    increase, so the returned objective trace is non-increasing.
    """
    cfg = cfg or SolverConfig()
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    prob = _Problem(op, Y, cfg)
    if X0 is None:
        X0 = np.zeros((prob.kN, prob.C), dtype=np.complex128)
    else:
        X0 = np.ascontiguousarray(X0, dtype=np.complex128).reshape(prob.kN, prob.C)
    X, AX, trace, its, conv = _fista(prob, float(lam), X0, prob.forward(X0),
                                     cfg.rel_change_tol, cfg.max_iters)
    resid = float(np.sqrt(prob.ker.residual_sq(AX, prob.Y)))
    return SolverResult(X, trace, its, resid, [float(lam)], [its], conv)


def continuation_schedule(lam0: float, cfg: SolverConfig) -> list[float]:
    if cfg.stages == 1:
        return [lam0]
    ratios = cfg.lambda_min_factor ** (np.arange(cfg.stages) / (cfg.stages - 1))
    return [float(lam0 * r) for r in ratios]


def solve_with_continuation(op: LiftedOperator, Y: np.ndarray, cfg: SolverConfig | None = None,
                            X0: np.ndarray | None = None) -> SolverResult:
    """Warm-started FISTA over a geometric ``lam`` schedule.

    Starts at ``lambda_max_factor * lambda_max(A, Y)`` and decays to
    ``lambda_min_factor`` times that over ``cfg.stages`` stages. The returned
    trace concatenates all stages; it stays non-increasing because each stage
    starts from the previous minimizer with a smaller ``lam``.
    """
    cfg = cfg or SolverConfig()
    prob = _Problem(op, Y, cfg)
    lam0 = cfg.lambda_max_factor * lambda_max(op, prob.Y, cfg.regularizer)
    lams = continuation_schedule(lam0, cfg)
    if X0 is None:
        X = np.zeros((prob.kN, prob.C), dtype=np.complex128)
    else:
        X = np.ascontiguousarray(X0, dtype=np.complex128).reshape(prob.kN, prob.C)
    AX = prob.forward(X)
    trace: list[float] = []
    stage_its: list[int] = []
    conv = False
    for s, lam in enumerate(lams):
        last = s == len(lams) - 1
        tol = cfg.rel_change_tol if (last or cfg.stage_tol is None) else cfg.stage_tol
        X, AX, tr, its, conv = _fista(prob, lam, X, AX, tol, cfg.max_iters)
        trace.extend(tr if not trace else tr[1:])
        stage_its.append(its)
    resid = float(np.sqrt(prob.ker.residual_sq(AX, prob.Y)))
    logger.debug("continuation: %d stages, %d iterations, residual %.3g", len(lams),
                 sum(stage_its), resid)
    return SolverResult(X, trace, sum(stage_its), resid, lams, stage_its, conv)


def column_l2_solve(op: LiftedOperator, Y: np.ndarray, lam: float,
                    cfg: SolverConfig | None = None) -> SolverResult:
    """Baseline: same FISTA loop with the prox applied to whole columns."""
    cfg = cfg or SolverConfig()
    cfg = SolverConfig(**{**cfg.__dict__, "regularizer": Regularizer.COLUMN_L2})
    return fista_l12(op, Y, lam, cfg)


# ---------------------------------------------------------------------------
# known-calibration baseline


@dataclass
class OMPResult:
    z: np.ndarray
    support: np.ndarray
    residual: float
    ridge_used: bool = False


def omp_known_calibration(sensitivities: np.ndarray, psi: Sparsifier, omega: SamplingPattern,
                          Y: np.ndarray, n: int) -> OMPResult:
    """Joint-sparsity OMP for ``y_i = F_Omega(s_i * Psi^* z)`` with known ``s_i``.

    Each step selects the atom with the largest correlation energy summed over
    coils, then refits all selected coefficients by least squares on the
    stacked system. Runs exactly ``n`` steps.
    """
    S = np.asarray(sensitivities, dtype=np.complex128)
    if S.ndim == 1:
        S = S[:, None]
    Y = np.asarray(Y, dtype=np.complex128)
    if Y.ndim == 1:
        Y = Y[:, None]
    N, C = S.shape
    if N != psi.N or Y.shape != (omega.L, C):
        raise ValueError(f"shape mismatch: sensitivities {S.shape}, measurements {Y.shape}, "
                         f"L={omega.L}, N={psi.N}")
    if n < 1 or n > N:
        raise ValueError(f"sparsity n must be in [1, {N}]")
    shape = psi.shape
    Sc = S.conj()

    def correlate(R):
        # column i: Psi (conj(s_i) * F_Omega^* r_i)
        return psi.forward(Sc * partial_fourier_adjoint(R, omega, shape))

    support: list[int] = []
    cols = np.empty((omega.L * C, 0), dtype=np.complex128)
    yv = Y.reshape(-1, order="F")
    R = Y.copy()
    coef = np.zeros(0, dtype=np.complex128)
    ridge_used = False
    for _ in range(n):
        energy = np.sum(np.abs(correlate(R)) ** 2, axis=1)
        energy[support] = -1.0
        j = int(np.argmax(energy))
        support.append(j)
        atom = np.zeros(N, dtype=np.complex128)
        atom[j] = 1.0
        col = partial_fourier_apply(S * psi.inverse(atom)[:, None], omega, shape)
        cols = np.hstack([cols, col.reshape(-1, 1, order="F")])
        coef, rank, ridge = _lstsq(cols, yv)
        ridge_used |= ridge
        R = (yv - cols @ coef).reshape(omega.L, C, order="F")
    z = np.zeros(N, dtype=np.complex128)
    z[support] = coef
    return OMPResult(z, np.array(support), float(np.linalg.norm(R)), ridge_used)


def _lstsq(M: np.ndarray, y: np.ndarray):
    coef, _, rank, _ = np.linalg.lstsq(M, y, rcond=None)
    if rank < M.shape[1]:
        logger.warning("OMP least squares is rank deficient (%d < %d); using ridge 1e-12",
                       rank, M.shape[1])
        G = M.conj().T @ M + 1e-12 * np.eye(M.shape[1])
        coef = np.linalg.solve(G, M.conj().T @ y)
        return coef, rank, True
    return coef, rank, False
