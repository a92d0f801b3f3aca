"""Orthonormal sparsifying transforms and the partial Fourier sampling operator.

Every operator here acts on arrays whose leading axis has length ``N`` (the
flattened grid); any trailing axes are treated as a batch. Two-dimensional
grids are flattened column-major, so grid entry ``(r, c)`` lives at flat index
``r + c * n1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.fft as sfft


@dataclass(frozen=True)
class GridShape:
    """Signal grid of ``n1`` rows by ``n2`` columns (``n2 == 1`` for 1D)."""

    n1: int
    n2: int = 1

    def __post_init__(self):
        if int(self.n1) < 1 or int(self.n2) < 1:
            raise ValueError(f"grid dimensions must be positive, got {self.n1}x{self.n2}")

    @property
    def N(self) -> int:
        return self.n1 * self.n2

    @property
    def is_2d(self) -> bool:
        return self.n2 > 1

    def flatten(self, grid: np.ndarray) -> np.ndarray:
        """Column-major flattening of an ``(n1, n2)`` array."""
        grid = np.asarray(grid)
        if grid.shape != (self.n1, self.n2):
            raise ValueError(f"expected grid of shape {(self.n1, self.n2)}, got {grid.shape}")
        return grid.reshape(self.N, order="F")

    def unflatten(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        if x.shape != (self.N,):
            raise ValueError(f"expected vector of length {self.N}, got shape {x.shape}")
        return x.reshape((self.n1, self.n2), order="F")

    # Batched helpers: (N, *batch) <-> (n2, n1, *batch). A C-order reshape of the
    # leading axis gives the transposed grid, which is harmless for separable
    # transforms as long as both axes are transformed.
    def _to_grid(self, a: np.ndarray) -> np.ndarray:
        return a.reshape((self.n2, self.n1) + a.shape[1:])

    def _from_grid(self, g: np.ndarray) -> np.ndarray:
        return g.reshape((self.N,) + g.shape[2:])


class SparsifierKind(str, Enum):
    IDENTITY = "identity"
    DCT2 = "dct2"
    DFT = "dft"


def _check_leading(a: np.ndarray, N: int, what: str) -> None:
    if a.ndim == 0 or a.shape[0] != N:
        raise ValueError(f"{what}: leading axis must have length {N}, got shape {a.shape}")


@dataclass(frozen=True)
class Sparsifier:
    """Orthonormal transform ``Psi`` with ``z = Psi x`` sparse.

    ``forward`` applies ``Psi``; ``inverse`` applies ``Psi^*`` (its inverse).
    """

    kind: SparsifierKind
    shape: GridShape

    def __post_init__(self):
        object.__setattr__(self, "kind", SparsifierKind(self.kind))

    @property
    def N(self) -> int:
        return self.shape.N

    def _apply(self, a: np.ndarray, adjoint: bool) -> np.ndarray:
        a = np.asarray(a, dtype=np.complex128)
        _check_leading(a, self.N, "sparsifier")
        if self.kind is SparsifierKind.IDENTITY:
            return a.copy()
        if not self.shape.is_2d:
            # the 1D transforms are measurably cheaper than their n-d wrappers
            if self.kind is SparsifierKind.DCT2:
                return (sfft.idct if adjoint else sfft.dct)(a, type=2, axis=0, norm="ortho")
            return (sfft.ifft if adjoint else sfft.fft)(a, axis=0, norm="ortho")
        g = self.shape._to_grid(a)
        axes = (0, 1)
        if self.kind is SparsifierKind.DCT2:
            fn = sfft.idctn if adjoint else sfft.dctn
            out = fn(g, type=2, axes=axes, norm="ortho")
        else:
            fn = sfft.ifftn if adjoint else sfft.fftn
            out = fn(g, axes=axes, norm="ortho")
        return self.shape._from_grid(out)

    def forward(self, x: np.ndarray) -> np.ndarray:
        return self._apply(x, adjoint=False)

    def inverse(self, z: np.ndarray) -> np.ndarray:
        return self._apply(z, adjoint=True)

    def matrix(self) -> np.ndarray:
        """Dense ``N x N`` matrix of ``Psi`` (small grids only)."""
        return self.forward(np.eye(self.N, dtype=np.complex128))


def sparsify(x: np.ndarray, psi: Sparsifier) -> np.ndarray:
    return psi.forward(x)


def unsparsify(z: np.ndarray, psi: Sparsifier) -> np.ndarray:
    return psi.inverse(z)


@dataclass(frozen=True)
class SamplingPattern:
    """Sorted, distinct k-space indices ``Omega`` into a flattened grid of size ``N``."""

    indices: np.ndarray
    N: int

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64).ravel()
        if idx.size == 0:
            raise ValueError("sampling pattern is empty")
        if idx.size > self.N:
            raise ValueError(f"sampling pattern has {idx.size} indices but N = {self.N}")
        if idx.min() < 0 or idx.max() >= self.N:
            raise ValueError(f"sampling indices must lie in [0, {self.N})")
        if np.any(np.diff(idx) <= 0):
            raise ValueError("sampling indices must be strictly increasing")
        idx = idx.copy()
        idx.flags.writeable = False
        object.__setattr__(self, "indices", idx)

    @property
    def L(self) -> int:
        return int(self.indices.size)

    @classmethod
    def full(cls, N: int) -> "SamplingPattern":
        return cls(np.arange(N), N)

    def __eq__(self, other):
        if not isinstance(other, SamplingPattern):
            return NotImplemented
        return self.N == other.N and np.array_equal(self.indices, other.indices)

    def __hash__(self):
        return hash((self.N, self.indices.tobytes()))


def _unnormalized_dft(a: np.ndarray, shape: GridShape, inverse: bool) -> np.ndarray:
    # scipy's "backward" norm: forward unscaled, inverse scaled by 1/N.
    if shape.is_2d:
        g = shape._to_grid(a)
        out = (sfft.ifftn if inverse else sfft.fftn)(g, axes=(0, 1))
        return shape._from_grid(out)
    return (sfft.ifft if inverse else sfft.fft)(a, axis=0)


def partial_fourier_apply(x: np.ndarray, omega: SamplingPattern, shape: GridShape) -> np.ndarray:
    """``F_Omega x``: the unitary DFT scaled by ``sqrt(N/L)`` and restricted to ``Omega``.

    Equivalently the rows of the unnormalized DFT in ``Omega`` divided by
    ``sqrt(L)``, so that ``F_Omega^* F_Omega`` restricted to full sampling is the
    identity and ``F_Omega F_Omega^* = (N/L) I_L``.
    """
    x = np.asarray(x, dtype=np.complex128)
    _check_leading(x, shape.N, "partial_fourier_apply")
    if omega.N != shape.N:
        raise ValueError(f"pattern is for N={omega.N}, grid has N={shape.N}")
    spec = _unnormalized_dft(x, shape, inverse=False)
    return spec[omega.indices] / np.sqrt(omega.L)


def partial_fourier_adjoint(y: np.ndarray, omega: SamplingPattern, shape: GridShape) -> np.ndarray:
    """Conjugate transpose of :func:`partial_fourier_apply`."""
    y = np.asarray(y, dtype=np.complex128)
    if y.ndim == 0 or y.shape[0] != omega.L:
        raise ValueError(f"expected {omega.L} k-space samples, got shape {y.shape}")
    if omega.N != shape.N:
        raise ValueError(f"pattern is for N={omega.N}, grid has N={shape.N}")
    full = np.zeros((shape.N,) + y.shape[1:], dtype=np.complex128)
    full[omega.indices] = y
    # adjoint of the unscaled DFT is N * (inverse DFT)
    return _unnormalized_dft(full, shape, inverse=True) * (shape.N / np.sqrt(omega.L))

