"""Dense reference implementations written from the defining formulas.

None of these call into the library's transform code paths.
"""

import numpy as np


def dct2_matrix_1d(n):
    """Orthonormal DCT-II from the cosine formula."""
    j = np.arange(n)
    u = np.arange(n)[:, None]
    M = np.cos(np.pi * (2 * j[None, :] + 1) * u / (2 * n))
    M[0] *= np.sqrt(1.0 / n)
    M[1:] *= np.sqrt(2.0 / n)
    return M


def dft_matrix_1d(n, unitary=False):
    j = np.arange(n)
    F = np.exp(-2j * np.pi * np.outer(j, j) / n)
    return F / np.sqrt(n) if unitary else F


def separable(M1, M2):
    """Matrix acting on the column-major flattening of an ``n1 x n2`` grid.

    ``vec(M1 G M2^T) = (M2 kron M1) vec(G)``.
    """
    return np.kron(M2, M1)


def psi_matrix(kind, n1, n2=1):
    if kind == "identity":
        return np.eye(n1 * n2, dtype=complex)
    if kind == "dct2":
        return separable(dct2_matrix_1d(n1), dct2_matrix_1d(n2)).astype(complex)
    if kind == "dft":
        return separable(dft_matrix_1d(n1, True), dft_matrix_1d(n2, True))
    raise ValueError(kind)


def partial_fourier_matrix(omega, n1, n2=1):
    """Rows ``omega`` of the unnormalized 2-D DFT, scaled by ``1/sqrt(L)``."""
    F = separable(dft_matrix_1d(n1), dft_matrix_1d(n2))
    omega = np.asarray(omega)
    return F[omega] / np.sqrt(omega.size)


def phi_matrix(B, Psi):
    """Dense ``Phi`` (``N x kN``) from ``Phi[j, i*k + l] = B[j, l] * (Psi^*)[j, i]``."""
    N, k = B.shape
    Psi_star = Psi.conj().T
    P = np.zeros((N, k * N), dtype=complex)
    for j in range(N):
        for i in range(N):
            for l in range(k):
                P[j, i * k + l] = B[j, l] * Psi_star[j, i]
    return P


def lifted_matrix(B, Psi, omega, n1, n2=1):
    return partial_fourier_matrix(omega, n1, n2) @ phi_matrix(B, Psi)


def random_complex(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_orthonormal(rng, N, k):
    Q, _ = np.linalg.qr(random_complex(rng, (N, k)))
    return Q
