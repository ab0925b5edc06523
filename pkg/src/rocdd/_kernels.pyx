# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled propagation kernels: Pade(13) scaling-and-squaring matrix
exponential and time-ordered products of slice exponentials.

Mirrors the pure-Python implementation in ``_kernels_py``; the public
surface is selected at import time in ``rocdd.kernels``.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport ceil, log2

cnp.import_array()

cdef double[14] _B = [
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0, 129060195264000.0, 10559470521600.0,
    670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
    960960.0, 16380.0, 182.0, 1.0,
]
cdef double _THETA13 = 5.371920351148152


cdef void _matmul(double complex[:, ::1] a, double complex[:, ::1] b,
                  double complex[:, ::1] out, int d) noexcept nogil:
    cdef int i, j, k
    cdef double complex acc
    for i in range(d):
        for j in range(d):
            acc = 0
            for k in range(d):
                acc = acc + a[i, k] * b[k, j]
            out[i, j] = acc


cdef int _solve(double complex[:, ::1] a, double complex[:, ::1] b, int d) except -1 nogil:
    # In-place solve a X = b with partial pivoting; result left in b.
    cdef int i, j, k, piv
    cdef double best, mag
    cdef double complex factor, tmp
    for k in range(d):
        piv = k
        best = a[k, k].real * a[k, k].real + a[k, k].imag * a[k, k].imag
        for i in range(k + 1, d):
            mag = a[i, k].real * a[i, k].real + a[i, k].imag * a[i, k].imag
            if mag > best:
                best = mag
                piv = i
        if best == 0.0:
            with gil:
                raise np.linalg.LinAlgError("singular Pade denominator")
        if piv != k:
            for j in range(d):
                tmp = a[k, j]; a[k, j] = a[piv, j]; a[piv, j] = tmp
                tmp = b[k, j]; b[k, j] = b[piv, j]; b[piv, j] = tmp
        for i in range(k + 1, d):
            factor = a[i, k] / a[k, k]
            for j in range(k, d):
                a[i, j] = a[i, j] - factor * a[k, j]
            for j in range(d):
                b[i, j] = b[i, j] - factor * b[k, j]
    for k in range(d - 1, -1, -1):
        for j in range(d):
            tmp = b[k, j]
            for i in range(k + 1, d):
                tmp = tmp - a[k, i] * b[i, j]
            b[k, j] = tmp / a[k, k]
    return 0


cdef void _expm_into(double complex[:, ::1] a, double complex[:, ::1] out,
                     double complex[:, ::1] w1, double complex[:, ::1] w2,
                     double complex[:, ::1] a2, double complex[:, ::1] a4,
                     double complex[:, ::1] a6, double complex[:, ::1] u,
                     double complex[:, ::1] v, int d):
    # exp(a) -> out; a is destroyed.  Work arrays are caller-allocated.
    cdef int i, j, s, r
    cdef double norm1, colsum, scale
    norm1 = 0.0
    for j in range(d):
        colsum = 0.0
        for i in range(d):
            colsum += abs(a[i, j])
        if colsum > norm1:
            norm1 = colsum
    s = 0
    if norm1 > _THETA13:
        s = <int>ceil(log2(norm1 / _THETA13))
    if s > 0:
        scale = 2.0 ** (-s)
        for i in range(d):
            for j in range(d):
                a[i, j] = a[i, j] * scale

    _matmul(a, a, a2, d)
    _matmul(a2, a2, a4, d)
    _matmul(a2, a4, a6, d)
    # w1 = b13*a6 + b11*a4 + b9*a2 ; u = a @ (a6 @ w1 + b7*a6 + b5*a4 + b3*a2 + b1*I)
    for i in range(d):
        for j in range(d):
            w1[i, j] = _B[13] * a6[i, j] + _B[11] * a4[i, j] + _B[9] * a2[i, j]
    _matmul(a6, w1, w2, d)
    for i in range(d):
        for j in range(d):
            w2[i, j] = w2[i, j] + _B[7] * a6[i, j] + _B[5] * a4[i, j] + _B[3] * a2[i, j]
        w2[i, i] = w2[i, i] + _B[1]
    _matmul(a, w2, u, d)
    # w1 = b12*a6 + b10*a4 + b8*a2 ; v = a6 @ w1 + b6*a6 + b4*a4 + b2*a2 + b0*I
    for i in range(d):
        for j in range(d):
            w1[i, j] = _B[12] * a6[i, j] + _B[10] * a4[i, j] + _B[8] * a2[i, j]
    _matmul(a6, w1, v, d)
    for i in range(d):
        for j in range(d):
            v[i, j] = v[i, j] + _B[6] * a6[i, j] + _B[4] * a4[i, j] + _B[2] * a2[i, j]
        v[i, i] = v[i, i] + _B[0]
    # out = (v - u)^{-1} (v + u)
    for i in range(d):
        for j in range(d):
            w1[i, j] = v[i, j] - u[i, j]
            out[i, j] = v[i, j] + u[i, j]
    _solve(w1, out, d)
    for r in range(s):
        _matmul(out, out, w2, d)
        for i in range(d):
            for j in range(d):
                out[i, j] = w2[i, j]


def expm(a):
    """Matrix exponential of ``a`` (2-D) or of each matrix in a stack (3-D)."""
    arr = np.array(a, dtype=np.complex128, order="C")
    single = arr.ndim == 2
    if single:
        arr = arr[None]
    if arr.ndim != 3 or arr.shape[1] != arr.shape[2] or arr.shape[2] == 0:
        raise ValueError("expected a square matrix or stack of square matrices")
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite entries in matrix exponential input")
    cdef int d = arr.shape[1]
    cdef int n = arr.shape[0]
    out = np.empty_like(arr)
    work = np.empty((7, d, d), dtype=np.complex128)
    cdef double complex[:, :, ::1] av = arr
    cdef double complex[:, :, ::1] ov = out
    cdef double complex[:, :, ::1] wv = work
    cdef int m
    for m in range(n):
        _expm_into(av[m], ov[m], wv[0], wv[1], wv[2], wv[3], wv[4], wv[5], wv[6], d)
    return out[0] if single else out


def expm_stack(gens, dts):
    """exp(-i G_m dt_m) for every generator in the stack ``gens`` (M, d, d)."""
    gens = np.asarray(gens, dtype=np.complex128)
    dts = np.asarray(dts, dtype=np.float64)
    if dts.ndim == 0:
        dts = np.broadcast_to(dts, gens.shape[:1])
    return expm(gens * (-1j * dts)[:, None, None])


def chain_propagator(gens, dts):
    """Time-ordered product exp(-i G_M dt_M) ... exp(-i G_1 dt_1)."""
    gens = np.asarray(gens, dtype=np.complex128)
    if gens.ndim != 3 or gens.shape[1] != gens.shape[2]:
        raise ValueError("expected a stack of square generators")
    if not np.all(np.isfinite(gens)):
        raise ValueError("non-finite entries in generator stack")
    dts_arr = np.asarray(dts, dtype=np.float64)
    if dts_arr.ndim == 0:
        dts_arr = np.broadcast_to(dts_arr, gens.shape[:1]).copy()
    cdef int n = gens.shape[0]
    cdef int d = gens.shape[1]
    scaled = gens * (-1j * dts_arr)[:, None, None]
    scaled = np.ascontiguousarray(scaled)
    u = np.eye(d, dtype=np.complex128)
    step = np.empty((d, d), dtype=np.complex128)
    acc = np.empty((d, d), dtype=np.complex128)
    work = np.empty((7, d, d), dtype=np.complex128)
    cdef double complex[:, :, ::1] sv = scaled
    cdef double complex[:, ::1] uv = u
    cdef double complex[:, ::1] stepv = step
    cdef double complex[:, ::1] accv = acc
    cdef double complex[:, :, ::1] wv = work
    cdef int m, i, j
    for m in range(n):
        _expm_into(sv[m], stepv, wv[0], wv[1], wv[2], wv[3], wv[4], wv[5], wv[6], d)
        _matmul(stepv, uv, accv, d)
        for i in range(d):
            for j in range(d):
                uv[i, j] = accv[i, j]
    return u
