# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""FFTW-backed 1D orthonormal DCT-II kernels, fused with the basis products.

The DCT of length ``N`` is computed with one complex FFT of length ``N``
(even/odd reordering followed by a quarter-wave twiddle). The formulas are
complex-linear, so complex columns are transformed directly. Every column of
a batch goes through the same FFTW plan, which keeps identical columns
bit-identical.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()

ctypedef double complex cplx

cdef extern from "fftw3.h" nogil:
    ctypedef double fftw_complex[2]
    ctypedef struct fftw_plan_s:
        pass
    ctypedef fftw_plan_s* fftw_plan
    fftw_plan fftw_plan_many_dft(int rank, const int *n, int howmany,
                                 fftw_complex *inp, const int *inembed, int istride, int idist,
                                 fftw_complex *out, const int *onembed, int ostride, int odist,
                                 int sign, unsigned flags)
    void fftw_execute(const fftw_plan p)
    void fftw_destroy_plan(fftw_plan p)
    void *fftw_malloc(size_t n)
    void fftw_free(void *p)
    int FFTW_FORWARD
    int FFTW_BACKWARD
    unsigned FFTW_MEASURE
    unsigned FFTW_ESTIMATE


cdef class DCTPlan:
    """Forward and inverse orthonormal DCT-II along axis 0 of ``(N, m)`` arrays.

    The scratch buffers hold the ``m`` transforms contiguously (``m x N``); the
    reordering pass doubles as the transpose.
    """

    cdef readonly Py_ssize_t N, m, ld
    cdef fftw_plan fwd, bwd
    cdef double *a
    cdef double *b
    cdef double[:, ::1] tw      # rows: cos, sin of pi*k/(2N), forward scale, inverse scale
    cdef Py_ssize_t[::1] perm    # grid index -> reordered position

    def __cinit__(self, Py_ssize_t N, Py_ssize_t m, bint measure=True):
        cdef int n = <int>N
        self.N = N
        self.m = m
        # padded row stride keeps the transposing passes clear of cache-set aliasing
        self.ld = N + 8 if N >= 64 else N
        cdef int ld = <int>self.ld
        self.a = <double *>fftw_malloc(2 * self.ld * m * sizeof(double))
        self.b = <double *>fftw_malloc(2 * self.ld * m * sizeof(double))
        if self.a == NULL or self.b == NULL:
            raise MemoryError()
        cdef unsigned flags = FFTW_MEASURE if measure else FFTW_ESTIMATE
        self.fwd = fftw_plan_many_dft(1, &n, <int>m, <fftw_complex *>self.a, NULL, 1, ld,
                                      <fftw_complex *>self.b, NULL, 1, ld, FFTW_FORWARD, flags)
        self.bwd = fftw_plan_many_dft(1, &n, <int>m, <fftw_complex *>self.b, NULL, 1, ld,
                                      <fftw_complex *>self.a, NULL, 1, ld, FFTW_BACKWARD, flags)
        if self.fwd == NULL or self.bwd == NULL:
            raise RuntimeError("FFTW planning failed")

    def __init__(self, Py_ssize_t N, Py_ssize_t m, bint measure=True):
        if N < 1 or m < 1:
            raise ValueError("N and m must be positive")
        k = np.arange(N)
        ang = np.pi * k / (2.0 * N)
        s = np.full(N, np.sqrt(1.0 / (2.0 * N)))
        s[0] = np.sqrt(1.0 / (4.0 * N))
        self.tw = np.ascontiguousarray(np.stack([np.cos(ang), np.sin(ang), s, 1.0 / (s * N)]))
        perm = np.empty(N, dtype=np.intp)
        half = (N + 1) // 2
        perm[0::2] = np.arange(half)
        perm[1::2] = N - 1 - np.arange(N // 2)
        self.perm = perm

    def __dealloc__(self):
        if self.fwd != NULL:
            fftw_destroy_plan(self.fwd)
        if self.bwd != NULL:
            fftw_destroy_plan(self.bwd)
        if self.a != NULL:
            fftw_free(self.a)
        if self.b != NULL:
            fftw_free(self.b)

    cdef void _twiddle_forward(self, double *out) noexcept nogil:
        # out[k] = s_k (w_k V_k + conj(w_k) V_{N-k}), w_k = exp(-i pi k / 2N)
        cdef Py_ssize_t N = self.N, m = self.m, k, j, r
        cdef double c, sn, s, vr, vi, qr, qi
        cdef const double *V
        cdef double *o
        for j in range(m):
            V = self.b + 2 * j * self.ld
            o = out + 2 * j
            for k in range(N):
                c = self.tw[0, k]
                sn = self.tw[1, k]
                s = self.tw[2, k]
                r = N - k if k else 0
                vr = V[2 * k]
                vi = V[2 * k + 1]
                qr = V[2 * r]
                qi = V[2 * r + 1]
                # (c - i sn) v + (c + i sn) q
                o[2 * k * m] = s * (c * (vr + qr) + sn * (vi - qi))
                o[2 * k * m + 1] = s * (c * (vi + qi) - sn * (vr - qr))

    cdef void _twiddle_inverse(self, const double *y) noexcept nogil:
        # V_k = conj(w_k) (a_k - i b_k) / 2 with a_k = y_k / s_k, b_k = y_{N-k} / s_{N-k};
        # the 1/N of the unnormalized backward FFT is folded into tw[3]
        cdef Py_ssize_t N = self.N, m = self.m, k, j, r
        cdef double c, sn, ga, gb, ar, ai, br, bi, zr, zi
        cdef const double *yj
        cdef double *V
        for j in range(m):
            V = self.b + 2 * j * self.ld
            yj = y + 2 * j
            for k in range(N):
                c = self.tw[0, k]
                sn = self.tw[1, k]
                ga = 0.5 * self.tw[3, k]
                if k == 0:
                    gb = 0.0
                    r = 0
                else:
                    r = N - k
                    gb = 0.5 * self.tw[3, r]
                ar = ga * yj[2 * k * m]
                ai = ga * yj[2 * k * m + 1]
                br = gb * yj[2 * r * m]
                bi = gb * yj[2 * r * m + 1]
                # (c + i sn) (a - i b)
                zr = ar + bi
                zi = ai - br
                V[2 * k] = c * zr - sn * zi
                V[2 * k + 1] = c * zi + sn * zr

    def dct(self, const cplx[:, ::1] x, cplx[:, ::1] out):
        self._check(x.shape[0], x.shape[1], out.shape[0], out.shape[1])
        cdef Py_ssize_t N = self.N, m = self.m, n, j, p
        cdef const double *xr
        with nogil:
            for n in range(N):
                p = self.perm[n]
                xr = <const double *>&x[n, 0]
                for j in range(m):
                    self.a[2 * (j * self.ld + p)] = xr[2 * j]
                    self.a[2 * (j * self.ld + p) + 1] = xr[2 * j + 1]
            fftw_execute(self.fwd)
            self._twiddle_forward(<double *>&out[0, 0])
        return np.asarray(out)

    def idct(self, const cplx[:, ::1] y, cplx[:, ::1] out):
        self._check(y.shape[0], y.shape[1], out.shape[0], out.shape[1])
        cdef Py_ssize_t N = self.N, m = self.m, n, j, p
        cdef double *o
        with nogil:
            self._twiddle_inverse(<const double *>&y[0, 0])
            fftw_execute(self.bwd)
            for n in range(N):
                p = self.perm[n]
                o = <double *>&out[n, 0]
                for j in range(m):
                    o[2 * j] = self.a[2 * (j * self.ld + p)]
                    o[2 * j + 1] = self.a[2 * (j * self.ld + p) + 1]
        return np.asarray(out)

    def spread_dct(self, const cplx[:, ::1] Bc, const cplx[:, ::1] u, cplx[:, :, ::1] out):
        """out[:, l, c] = DCT(Bc[:, l] * u[:, c])."""
        cdef Py_ssize_t N = self.N, ld = self.ld, k = Bc.shape[1], C = u.shape[1], n, l, c, p
        cdef double br, bi, ur, ui
        cdef const double *x
        cdef double *A
        if k * C != self.m or Bc.shape[0] != N or u.shape[0] != N:
            raise ValueError("shape mismatch in spread_dct")
        self._check(out.shape[0], out.shape[1] * out.shape[2], N, k * C)
        with nogil:
            for n in range(N):
                p = self.perm[n]
                x = <const double *>&u[n, 0]
                for l in range(k):
                    br = Bc[n, l].real
                    bi = Bc[n, l].imag
                    A = self.a + 2 * (l * C * self.ld + p)
                    for c in range(C):
                        ur = x[2 * c]
                        ui = x[2 * c + 1]
                        A[2 * c * ld] = br * ur - bi * ui
                        A[2 * c * ld + 1] = br * ui + bi * ur
            fftw_execute(self.fwd)
            self._twiddle_forward(<double *>&out[0, 0, 0])
        return np.asarray(out)

    def idct_combine(self, const cplx[:, ::1] B, const cplx[:, :, ::1] X, cplx[:, ::1] out):
        """out[:, c] = sum_l B[:, l] * IDCT(X[:, l, c])."""
        cdef Py_ssize_t N = self.N, ld = self.ld, k = B.shape[1], C = out.shape[1], n, l, c, p
        cdef double br, bi, wr, wi
        cdef const double *A
        cdef double *o
        if k * C != self.m or B.shape[0] != N or out.shape[0] != N:
            raise ValueError("shape mismatch in idct_combine")
        self._check(X.shape[0], X.shape[1] * X.shape[2], N, k * C)
        with nogil:
            self._twiddle_inverse(<const double *>&X[0, 0, 0])
            fftw_execute(self.bwd)
            for n in range(N):
                p = self.perm[n]
                o = <double *>&out[n, 0]
                for c in range(2 * C):
                    o[c] = 0.0
                for l in range(k):
                    br = B[n, l].real
                    bi = B[n, l].imag
                    A = self.a + 2 * (l * C * self.ld + p)
                    for c in range(C):
                        wr = A[2 * c * ld]
                        wi = A[2 * c * ld + 1]
                        o[2 * c] += br * wr - bi * wi
                        o[2 * c + 1] += br * wi + bi * wr
        return np.asarray(out)

    cdef _check(self, Py_ssize_t r1, Py_ssize_t c1, Py_ssize_t r2, Py_ssize_t c2):
        if r1 != self.N or c1 != self.m or r2 != self.N or c2 != self.m:
            raise ValueError(f"plan is for ({self.N}, {self.m}) arrays")


_plans = {}


def get_plan(Py_ssize_t N, Py_ssize_t m):
    """Cached plan for ``(N, m)`` arrays (plans own scratch buffers; not thread-safe)."""
    key = (N, m)
    plan = _plans.get(key)
    if plan is None:
        plan = DCTPlan(N, m)
        _plans[key] = plan
    return plan
