"""Random problem instances: subspace bases, coil coefficients, sparse signals,
sampling patterns, noise, and direct (non-lifted) measurement synthesis.

Every generator is a deterministic function of its parameters and seed. Seeds
may be integers, ``np.random.SeedSequence`` objects or ``Generator`` instances.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .liftops import SubspaceBasis
from .transforms import GridShape, SamplingPattern, Sparsifier, partial_fourier_apply


class BasisKind(str, Enum):
    HAAR = "haar"
    POLY = "poly"
    SIN2D = "sin2d"


class CoilModel(str, Enum):
    BASIS_COLUMNS = "basis_columns"
    COMPLEX_SPHERE = "complex_sphere"


class ValueModel(str, Enum):
    GAUSSIAN = "gaussian"
    UNIT = "unit"


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def complex_normal(rng: np.random.Generator, size) -> np.ndarray:
    """Standard circular complex Gaussian (``E|w|^2 = 1``)."""
    return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / np.sqrt(2.0)


@dataclass(frozen=True)
class CoilCoefficients:
    H: np.ndarray
    model: CoilModel

    @property
    def k(self) -> int:
        return self.H.shape[0]

    @property
    def C(self) -> int:
        return self.H.shape[1]


@dataclass(frozen=True)
class SparseSignal:
    z: np.ndarray
    support: np.ndarray

    @property
    def n(self) -> int:
        return int(self.support.size)


@dataclass(frozen=True)
class NoiseSpec:
    ratio: float = 0.0
    seed: object = None

    def __post_init__(self):
        if not self.ratio >= 0:
            raise ValueError(f"noise ratio must be nonnegative, got {self.ratio}")


@dataclass(frozen=True)
class MeasurementSet:
    """Multi-coil k-space samples ``Y`` (``L x C``) on the pattern ``omega``."""

    Y: np.ndarray
    omega: SamplingPattern
    shape: GridShape
    sigma: float = 0.0
    noise_norm: float = 0.0

    def __post_init__(self):
        Y = np.asarray(self.Y, dtype=np.complex128)
        if Y.ndim == 1:
            Y = Y[:, None]
        if Y.shape[0] != self.omega.L:
            raise ValueError(f"Y has {Y.shape[0]} rows but the pattern has L={self.omega.L}")
        if self.omega.N != self.shape.N:
            raise ValueError(f"pattern is for N={self.omega.N}, grid has N={self.shape.N}")
        object.__setattr__(self, "Y", Y)

    @property
    def L(self) -> int:
        return self.omega.L

    @property
    def C(self) -> int:
        return self.Y.shape[1]


# ---------------------------------------------------------------------------
# subspace bases


def _haar(N: int, k: int, rng) -> np.ndarray:
    # columns are drawn one at a time so the first j columns do not depend on k
    G = np.stack([complex_normal(rng, N) for _ in range(k)], axis=1)
    Q, R = np.linalg.qr(G)
    d = np.diag(R)
    # fix the QR phase ambiguity so Q is Haar distributed and reproducible
    return Q * (d / np.abs(d))


def _poly_1d(n: int, deg: int) -> np.ndarray:
    if n == 1:
        t = np.zeros(1)
    else:
        t = np.linspace(-1.0, 1.0, n)
    V = np.vander(t, deg, increasing=True)
    Q, R = np.linalg.qr(V)
    s = np.sign(np.diag(R))
    s[s == 0] = 1.0
    return Q * s


def _poly(shape: GridShape, k: int) -> np.ndarray:
    if not shape.is_2d:
        if k > shape.N:
            raise ValueError(f"poly basis needs k <= N, got k={k}, N={shape.N}")
        return _poly_1d(shape.N, k).astype(np.complex128)
    # tensor monomials ordered by total degree, then by the row-axis degree
    pairs = sorted(((a, b) for a in range(shape.n1) for b in range(shape.n2)),
                   key=lambda p: (p[0] + p[1], p[1], p[0]))[:k]
    P1 = _poly_1d(shape.n1, shape.n1)
    P2 = _poly_1d(shape.n2, shape.n2)
    cols = [np.kron(P2[:, b], P1[:, a]) for a, b in pairs]  # column-major flattening
    B = np.stack(cols, axis=1)
    # products of orthonormal 1D polynomials are already orthonormal
    return B.astype(np.complex128)


def _signed(f: np.ndarray, n: int) -> np.ndarray:
    return np.where(f <= n // 2, f, f - n)


def sin2d_frequencies(shape: GridShape, k: int) -> list[tuple[int, int]]:
    """The ``k`` lowest 2D DFT frequencies ``(f1, f2)``.

    Ordered by squared signed frequency magnitude; ties broken by
    ``(|f2|, f2 < 0, |f1|, f1 < 0)`` so that the order is deterministic and
    a positive frequency precedes its negative.
    """
    f1 = np.arange(shape.n1)
    f2 = np.arange(shape.n2)
    cand = []
    for a in f1:
        for b in f2:
            s1, s2 = int(_signed(a, shape.n1)), int(_signed(b, shape.n2))
            cand.append(((s1 * s1 + s2 * s2, abs(s2), s2 < 0, abs(s1), s1 < 0), (int(a), int(b))))
    cand.sort()
    return [fb for _, fb in cand[:k]]


def _sin2d(shape: GridShape, k: int) -> np.ndarray:
    r = np.arange(shape.n1)
    c = np.arange(shape.n2)
    cols = []
    for a, b in sin2d_frequencies(shape, k):
        g = np.exp(2j * np.pi * (a * r[:, None] / shape.n1 + b * c[None, :] / shape.n2))
        cols.append(shape.flatten(g) / np.sqrt(shape.N))
    return np.stack(cols, axis=1)


def gen_subspace_basis(kind: BasisKind | str, shape: GridShape, k: int, seed=None) -> SubspaceBasis:
    """Orthonormal ``N x k`` coil subspace.

    ``haar`` orthonormalizes an ``N x k`` complex Gaussian matrix. Because QR is
    Gram-Schmidt, drawing the same Gaussian columns makes the bases for
    different ``k`` nested. ``poly`` is an orthonormalized Vandermonde basis on
    ``[-1, 1]`` (tensor products in 2D). ``sin2d`` takes the ``k`` lowest
    frequency unitary DFT atoms.
    """
    kind = BasisKind(kind)
    N = shape.N
    if not 1 <= k < N:
        raise ValueError(f"need 1 <= k < N, got k={k}, N={N}")
    if kind is BasisKind.HAAR:
        B = _haar(N, k, _rng(seed))
    elif kind is BasisKind.POLY:
        B = _poly(shape, k)
    else:
        B = _sin2d(shape, k)
    return SubspaceBasis(B)


def nested_haar_bases(N: int, kmax: int, seed=None) -> dict[int, SubspaceBasis]:
    """Haar bases for ``k = 1..kmax`` sharing leading columns."""
    if not 1 <= kmax < N:
        raise ValueError(f"need 1 <= kmax < N, got kmax={kmax}, N={N}")
    Q = _haar(N, kmax, _rng(seed))
    return {k: SubspaceBasis(Q[:, :k]) for k in range(1, kmax + 1)}


# ---------------------------------------------------------------------------
# coils, signals, patterns


def gen_coil_coeffs(model: CoilModel | str, k: int, C: int, seed=None,
                    W: np.ndarray | None = None) -> CoilCoefficients:
    """``k x C`` coil coefficients with unit-norm columns.

    ``complex_sphere`` normalizes standard complex Gaussian vectors;
    ``basis_columns`` picks columns of the unitary matrix ``W`` uniformly with
    replacement (the unitary ``k``-point DFT unless given).
    """
    model = CoilModel(model)
    if k < 1 or C < 1:
        raise ValueError(f"need k, C >= 1, got k={k}, C={C}")
    rng = _rng(seed)
    if model is CoilModel.COMPLEX_SPHERE:
        H = complex_normal(rng, (k, C))
        H /= np.linalg.norm(H, axis=0, keepdims=True)
    else:
        if W is None:
            W = np.fft.fft(np.eye(k), norm="ortho")
        W = np.asarray(W, dtype=np.complex128)
        if W.shape != (k, k):
            raise ValueError(f"W must be {k}x{k}, got {W.shape}")
        if np.abs(W.conj().T @ W - np.eye(k)).max() > 1e-10:
            raise ValueError("W must be unitary")
        H = W[:, rng.integers(0, k, size=C)]
    return CoilCoefficients(np.ascontiguousarray(H), model)


def gen_sparse_signal(N: int, n: int, seed=None,
                      value_model: ValueModel | str = ValueModel.GAUSSIAN) -> SparseSignal:
    value_model = ValueModel(value_model)
    if not 1 <= n <= N:
        raise ValueError(f"need 1 <= n <= N, got n={n}, N={N}")
    rng = _rng(seed)
    support = np.sort(rng.permutation(N)[:n])
    if value_model is ValueModel.GAUSSIAN:
        vals = complex_normal(rng, n)
    else:
        vals = np.exp(2j * np.pi * rng.random(n))
    z = np.zeros(N, dtype=np.complex128)
    z[support] = vals
    return SparseSignal(z, support)


def gen_sampling_pattern(N: int, L: int, seed=None) -> SamplingPattern:
    """``L`` distinct indices drawn uniformly without replacement, sorted.

    The indices are the first ``L`` entries of one permutation, so for a fixed
    generator state the patterns are nested in ``L``.
    """
    if not 1 <= L <= N:
        raise ValueError(f"need 1 <= L <= N, got L={L}, N={N}")
    rng = _rng(seed)
    return SamplingPattern(np.sort(rng.permutation(N)[:L]), N)


# ---------------------------------------------------------------------------
# measurements


def coil_sensitivities(B: SubspaceBasis | np.ndarray, H: CoilCoefficients | np.ndarray) -> np.ndarray:
    """``N x C`` sensitivity maps ``S = B H``."""
    Bm = B.B if isinstance(B, SubspaceBasis) else np.asarray(B, dtype=np.complex128)
    Hm = H.H if isinstance(H, CoilCoefficients) else np.asarray(H, dtype=np.complex128)
    if Hm.ndim == 1:
        Hm = Hm[:, None]
    if Bm.shape[1] != Hm.shape[0]:
        raise ValueError(f"B has k={Bm.shape[1]} columns but H has {Hm.shape[0]} rows")
    return Bm @ Hm


def synthesize_measurements(B, H, z: np.ndarray | SparseSignal, psi: Sparsifier,
                            omega: SamplingPattern) -> MeasurementSet:
    """Column ``i`` of ``Y`` is ``F_Omega((B h_i) * (Psi^* z))``."""
    zv = z.z if isinstance(z, SparseSignal) else np.asarray(z, dtype=np.complex128).ravel()
    if zv.size != psi.N:
        raise ValueError(f"z has length {zv.size}, grid has N={psi.N}")
    S = coil_sensitivities(B, H)
    if S.shape[0] != psi.N:
        raise ValueError(f"B has {S.shape[0]} rows, grid has N={psi.N}")
    x = psi.inverse(zv)
    Y = partial_fourier_apply(S * x[:, None], omega, psi.shape)
    return MeasurementSet(Y, omega, psi.shape)


def add_noise(meas: MeasurementSet, spec: NoiseSpec) -> MeasurementSet:
    """Add complex Gaussian noise with ``||noise||_F = ratio * ||Y||_F`` exactly."""
    if spec.ratio == 0:
        return meas
    ynorm = np.linalg.norm(meas.Y)
    if ynorm == 0:
        raise ValueError("cannot scale noise relative to all-zero measurements")
    rng = _rng(spec.seed)
    E = complex_normal(rng, meas.Y.shape)
    E *= spec.ratio * ynorm / np.linalg.norm(E)
    enorm = float(np.linalg.norm(E))
    return MeasurementSet(meas.Y + E, meas.omega, meas.shape,
                          sigma=enorm / np.sqrt(meas.C), noise_norm=enorm)
