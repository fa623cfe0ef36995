# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the kernels in ``_fallback.py``.

Same signatures, same return conventions.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()

BACKEND = "cython"


cdef inline double _ipow(double x, long e) nogil:
    cdef double r = 1.0
    while e > 0:
        if e & 1:
            r *= x
        x *= x
        e >>= 1
    return r


cdef void _poly_eval(const long[:, ::1] exps, const double[:, ::1] coefs,
                     const double[::1] x, double[::1] out) nogil:
    cdef Py_ssize_t m = exps.shape[0], n = exps.shape[1], nout = coefs.shape[0]
    cdef Py_ssize_t i, j, r
    cdef double mon
    for r in range(nout):
        out[r] = 0.0
    for i in range(m):
        mon = 1.0
        for j in range(n):
            if exps[i, j]:
                mon *= _ipow(x[j], exps[i, j])
        for r in range(nout):
            out[r] += coefs[r, i] * mon


def poly_eval(cnp.ndarray exps, cnp.ndarray coefs, cnp.ndarray x):
    cdef const long[:, ::1] e = np.ascontiguousarray(exps, dtype=np.int64)
    cdef const double[:, ::1] c = np.ascontiguousarray(coefs, dtype=np.float64)
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    out = np.empty(c.shape[0])
    cdef double[::1] ov = out
    _poly_eval(e, c, xv, ov)
    return out


def poly_jacobian(cnp.ndarray exps, cnp.ndarray coefs, cnp.ndarray x):
    cdef const long[:, ::1] e = np.ascontiguousarray(exps, dtype=np.int64)
    cdef const double[:, ::1] c = np.ascontiguousarray(coefs, dtype=np.float64)
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t m = e.shape[0], n = e.shape[1], nout = c.shape[0]
    out = np.zeros((nout, n))
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t i, j, k, r
    cdef double mon
    for i in range(m):
        for k in range(n):
            if e[i, k] == 0:
                continue
            mon = <double>e[i, k]
            for j in range(n):
                if j == k:
                    mon *= _ipow(xv[j], e[i, j] - 1)
                elif e[i, j]:
                    mon *= _ipow(xv[j], e[i, j])
            for r in range(nout):
                ov[r, k] += c[r, i] * mon
    return out


cdef int _dykstra(const double[:, ::1] A, const double[::1] b, double[::1] z,
                  double tol, long max_sweeps, double[:, ::1] incr,
                  const double[::1] nrm2, double[::1] start, double[::1] w) nogil:
    cdef Py_ssize_t k = A.shape[0], n = A.shape[1]
    cdef Py_ssize_t i, j
    cdef long sweep
    cdef double viol, s, d
    cdef bint inside = True
    for i in range(k):
        s = 0.0
        for j in range(n):
            s += A[i, j] * z[j]
        if s > b[i]:
            inside = False
            break
    if inside:
        return 0
    for i in range(k):
        for j in range(n):
            incr[i, j] = 0.0
    for sweep in range(1, max_sweeps + 1):
        for j in range(n):
            start[j] = z[j]
        for i in range(k):
            viol = -b[i]
            for j in range(n):
                w[j] = z[j] + incr[i, j]
                viol += A[i, j] * w[j]
            if viol > 0:
                s = viol / nrm2[i]
                for j in range(n):
                    z[j] = w[j] - s * A[i, j]
            else:
                for j in range(n):
                    z[j] = w[j]
            for j in range(n):
                incr[i, j] = w[j] - z[j]
        s = 0.0
        for j in range(n):
            d = z[j] - start[j]
            s += d * d
        if sqrt(s) < tol:
            return <int>sweep
    return -1


def dykstra(cnp.ndarray A, cnp.ndarray b, x, double tol, long max_sweeps):
    cdef const double[:, ::1] av = np.ascontiguousarray(A, dtype=np.float64)
    cdef const double[::1] bv = np.ascontiguousarray(b, dtype=np.float64)
    z = np.array(x, dtype=np.float64)
    cdef double[::1] zv = z
    cdef Py_ssize_t k = av.shape[0], n = av.shape[1]
    cdef double[:, ::1] incr = np.empty((k, n))
    cdef double[::1] nrm2 = np.einsum("ij,ij->i", A, A)
    cdef double[::1] start = np.empty(n)
    cdef double[::1] w = np.empty(n)
    cdef int sweeps
    with nogil:
        sweeps = _dykstra(av, bv, zv, tol, max_sweeps, incr, nrm2, start, w)
    return z, sweeps


def invert_poly(cnp.ndarray exps, cnp.ndarray coefs, cnp.ndarray A, cnp.ndarray b,
                y, double q, double tol, long max_iter, double proj_tol,
                long proj_sweeps):
    cdef const long[:, ::1] e = np.ascontiguousarray(exps, dtype=np.int64)
    cdef const double[:, ::1] c = np.ascontiguousarray(coefs, dtype=np.float64)
    cdef const double[:, ::1] av = np.ascontiguousarray(A, dtype=np.float64)
    cdef const double[::1] bv = np.ascontiguousarray(b, dtype=np.float64)
    cdef const double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t k = av.shape[0], n = av.shape[1]
    x = np.array(yv, dtype=np.float64)
    cdef double[::1] xv = x
    cdef double[::1] z = np.empty(n)
    cdef double[::1] fx = np.empty(c.shape[0])
    cdef double[:, ::1] incr = np.empty((k, n))
    cdef double[::1] nrm2 = np.einsum("ij,ij->i", A, A)
    cdef double[::1] start = np.empty(n)
    cdef double[::1] w = np.empty(n)
    cdef double factor = q / (1.0 - q)
    cdef double step, d
    cdef long it
    cdef Py_ssize_t j
    cdef int sweeps
    cdef int status = 1
    cdef long done = max_iter
    with nogil:
        for it in range(1, max_iter + 1):
            _poly_eval(e, c, xv, fx)
            for j in range(n):
                z[j] = yv[j] - fx[j]
            sweeps = _dykstra(av, bv, z, proj_tol, proj_sweeps, incr, nrm2, start, w)
            step = 0.0
            for j in range(n):
                d = z[j] - xv[j]
                step += d * d
                xv[j] = z[j]
            if sweeps < 0:
                status = 2
                done = it
                break
            if sqrt(step) * factor < tol:
                status = 0
                done = it
                break
    return x, done, status
