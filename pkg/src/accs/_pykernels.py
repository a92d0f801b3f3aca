"""Pure-numpy versions of the compiled kernels in ``_ckernels.pyx``.

Same signatures and semantics; used when the extension is unavailable or when
``ACCS_PURE_PYTHON`` is set.
"""

import numpy as np


def combine_basis(B, W, out):
    np.einsum("nl,nlc->nc", B, W, out=out)
    return out


def spread_basis(Bc, u, out):
    np.multiply(Bc[:, :, None], u[:, None, :], out=out)
    return out


def _abs2(X):
    return X.real * X.real + X.imag * X.imag


def block_norms(X):
    return np.sqrt(_abs2(X).sum(axis=1))


def column_norms(X):
    return np.sqrt(_abs2(X).sum(axis=0))


def block_prox(Z, tau, out):
    nrm = block_norms(Z)
    keep = nrm > tau
    scale = np.zeros_like(nrm)
    scale[keep] = 1.0 - tau / nrm[keep]
    np.multiply(Z, scale[:, None], out=out)
    return float((nrm[keep] - tau).sum())


def column_prox(Z, tau, out):
    nrm = column_norms(Z)
    keep = nrm > tau
    scale = np.zeros_like(nrm)
    scale[keep] = 1.0 - tau / nrm[keep]
    np.multiply(Z, scale[None, :], out=out)
    return float((nrm[keep] - tau).sum())


def gradient_step(Z, G, step, out):
    np.subtract(Z, step * G, out=out)
    return out


def extrapolate(X, Xprev, beta, out):
    np.subtract(X, Xprev, out=out)
    out *= beta
    out += X
    return out


def diff_and_norm(X, Xold):
    return float(np.sqrt(_abs2(X - Xold).sum())), float(np.sqrt(_abs2(X).sum()))


def residual_sq(AX, Y):
    return float(_abs2(AX - Y).sum())
