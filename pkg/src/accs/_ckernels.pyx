# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner-loop kernels. Mirrors ``accs._pykernels`` exactly.

All reductions run in a fixed sequential order so that results do not depend
on the number of columns sharing a block.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()

ctypedef double complex cplx


def combine_basis(const cplx[:, ::1] B, const cplx[:, :, ::1] W, cplx[:, ::1] out):
    """out[n, c] = sum_l B[n, l] * W[n, l, c]."""
    cdef Py_ssize_t N = W.shape[0], k = W.shape[1], C = W.shape[2]
    cdef Py_ssize_t n, l, c
    cdef double br, bi, wr, wi
    cdef const double *w
    cdef double *o
    if N == 0 or k == 0 or C == 0:
        return np.asarray(out)
    with nogil:
        for n in range(N):
            o = <double *>&out[n, 0]
            for c in range(2 * C):
                o[c] = 0.0
            for l in range(k):
                br = B[n, l].real
                bi = B[n, l].imag
                w = <const double *>&W[n, l, 0]
                for c in range(C):
                    wr = w[2 * c]
                    wi = w[2 * c + 1]
                    o[2 * c] += br * wr - bi * wi
                    o[2 * c + 1] += br * wi + bi * wr
    return np.asarray(out)


def spread_basis(const cplx[:, ::1] Bc, const cplx[:, ::1] u, cplx[:, :, ::1] out):
    """out[n, l, c] = Bc[n, l] * u[n, c]."""
    cdef Py_ssize_t N = out.shape[0], k = out.shape[1], C = out.shape[2]
    cdef Py_ssize_t n, l, c
    cdef double br, bi, ur, ui
    cdef const double *x
    cdef double *o
    if N == 0 or k == 0 or C == 0:
        return np.asarray(out)
    with nogil:
        for n in range(N):
            x = <const double *>&u[n, 0]
            for l in range(k):
                br = Bc[n, l].real
                bi = Bc[n, l].imag
                o = <double *>&out[n, l, 0]
                for c in range(C):
                    ur = x[2 * c]
                    ui = x[2 * c + 1]
                    o[2 * c] = br * ur - bi * ui
                    o[2 * c + 1] = br * ui + bi * ur
    return np.asarray(out)


def block_norms(const cplx[:, ::1] X):
    """Frobenius norm of every row of a ``(nblocks, blocksize)`` array."""
    cdef Py_ssize_t nb = X.shape[0], bs = 2 * X.shape[1], j, i
    cdef double s
    cdef const double *x
    res = np.empty(nb, dtype=np.float64)
    cdef double[::1] r = res
    if nb == 0 or bs == 0:
        res[:] = 0.0
        return res
    with nogil:
        for j in range(nb):
            x = <const double *>&X[j, 0]
            s = 0.0
            for i in range(bs):
                s = s + x[i] * x[i]
            r[j] = sqrt(s)
    return res


def column_norms(const cplx[:, ::1] X):
    cdef Py_ssize_t R = X.shape[0], C = X.shape[1], i, c
    cdef const double *x
    res = np.zeros(C, dtype=np.float64)
    cdef double[::1] r = res
    if R == 0 or C == 0:
        return res
    with nogil:
        for i in range(R):
            x = <const double *>&X[i, 0]
            for c in range(C):
                r[c] = r[c] + (x[2 * c] * x[2 * c] + x[2 * c + 1] * x[2 * c + 1])
        for c in range(C):
            r[c] = sqrt(r[c])
    return res


def block_prox(const cplx[:, ::1] Z, double tau, cplx[:, ::1] out):
    """Block soft-thresholding of each row; returns the l1,2 norm of the result."""
    cdef Py_ssize_t nb = Z.shape[0], bs = 2 * Z.shape[1], j, i
    cdef double s, nrm, scale, total = 0.0
    cdef const double *z
    cdef double *o
    if nb == 0 or bs == 0:
        return 0.0
    with nogil:
        for j in range(nb):
            z = <const double *>&Z[j, 0]
            o = <double *>&out[j, 0]
            s = 0.0
            for i in range(bs):
                s = s + z[i] * z[i]
            nrm = sqrt(s)
            if nrm <= tau:
                for i in range(bs):
                    o[i] = 0.0
            else:
                scale = 1.0 - tau / nrm
                for i in range(bs):
                    o[i] = z[i] * scale
                total = total + (nrm - tau)
    return total


def column_prox(const cplx[:, ::1] Z, double tau, cplx[:, ::1] out):
    """Soft-thresholding of whole columns; returns sum of resulting column norms."""
    cdef Py_ssize_t R = Z.shape[0], C = Z.shape[1], i, c
    cdef double total = 0.0
    cdef const double *z
    cdef double *o
    norms = column_norms(Z)
    cdef double[::1] nrm = norms
    scales = np.empty(C, dtype=np.float64)
    cdef double[::1] sc = scales
    if R == 0 or C == 0:
        return 0.0
    with nogil:
        for c in range(C):
            if nrm[c] <= tau:
                sc[c] = 0.0
            else:
                sc[c] = 1.0 - tau / nrm[c]
                total = total + (nrm[c] - tau)
        for i in range(R):
            z = <const double *>&Z[i, 0]
            o = <double *>&out[i, 0]
            for c in range(C):
                o[2 * c] = z[2 * c] * sc[c]
                o[2 * c + 1] = z[2 * c + 1] * sc[c]
    return total


def gradient_step(const cplx[:, ::1] Z, const cplx[:, ::1] G, double step, cplx[:, ::1] out):
    """out = Z - step * G."""
    cdef Py_ssize_t n = 2 * Z.shape[0] * Z.shape[1], i
    if n == 0:
        return np.asarray(out)
    cdef const double *z = <const double *>&Z[0, 0]
    cdef const double *g = <const double *>&G[0, 0]
    cdef double *o = <double *>&out[0, 0]
    with nogil:
        for i in range(n):
            o[i] = z[i] - step * g[i]
    return np.asarray(out)


def extrapolate(const cplx[:, ::1] X, const cplx[:, ::1] Xprev, double beta, cplx[:, ::1] out):
    """out = X + beta * (X - Xprev)."""
    cdef Py_ssize_t n = 2 * X.shape[0] * X.shape[1], i
    if n == 0:
        return np.asarray(out)
    cdef const double *x = <const double *>&X[0, 0]
    cdef const double *p = <const double *>&Xprev[0, 0]
    cdef double *o = <double *>&out[0, 0]
    with nogil:
        for i in range(n):
            o[i] = x[i] + beta * (x[i] - p[i])
    return np.asarray(out)


def diff_and_norm(const cplx[:, ::1] X, const cplx[:, ::1] Xold):
    """Return (||X - Xold||_F, ||X||_F)."""
    cdef Py_ssize_t n = 2 * X.shape[0] * X.shape[1], i
    cdef double d = 0.0, s = 0.0, w
    if n == 0:
        return 0.0, 0.0
    cdef const double *x = <const double *>&X[0, 0]
    cdef const double *p = <const double *>&Xold[0, 0]
    with nogil:
        for i in range(n):
            w = x[i] - p[i]
            s = s + x[i] * x[i]
            d = d + w * w
    return sqrt(d), sqrt(s)


def residual_sq(const cplx[:, ::1] AX, const cplx[:, ::1] Y):
    """||AX - Y||_F^2."""
    cdef Py_ssize_t n = 2 * AX.shape[0] * AX.shape[1], i
    cdef double s = 0.0, w
    if n == 0:
        return 0.0
    cdef const double *a = <const double *>&AX[0, 0]
    cdef const double *y = <const double *>&Y[0, 0]
    with nogil:
        for i in range(n):
            w = a[i] - y[i]
            s = s + w * w
    return s
