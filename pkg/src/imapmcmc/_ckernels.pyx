# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the numerical kernels.

Same contract as ``imapmcmc._pykernels``: factor a small principal
submatrix in place with an unpivoted Cholesky decomposition and return the
quantity of interest plus the squared min/max pivot ratio.
"""

from libc.math cimport sqrt, log, NAN
from libc.stdlib cimport malloc, free

BACKEND = "cython"


cdef double _cholesky(double* a, Py_ssize_t m) noexcept nogil:
    # Lower-triangular factor overwrites a (row-major m x m).
    # Returns the pivot ratio, or 0 if a pivot is not strictly positive.
    cdef Py_ssize_t r, c, t
    cdef double s, d, dmin = 0.0, dmax = 0.0
    for c in range(m):
        s = a[c * m + c]
        for t in range(c):
            s -= a[c * m + t] * a[c * m + t]
        if not s > 0.0:
            return 0.0
        d = sqrt(s)
        a[c * m + c] = d
        if c == 0 or d < dmin:
            dmin = d
        if c == 0 or d > dmax:
            dmax = d
        for r in range(c + 1, m):
            s = a[r * m + c]
            for t in range(c):
                s -= a[r * m + t] * a[c * m + t]
            a[r * m + c] = s / d
    return (dmin / dmax) * (dmin / dmax)


cdef double* _gather(const double[:, ::1] mat, Py_ssize_t* idx, Py_ssize_t m) noexcept nogil:
    cdef double* a = <double*> malloc(m * m * sizeof(double))
    cdef Py_ssize_t r, c
    if a == NULL:
        return NULL
    for r in range(m):
        for c in range(r + 1):
            a[r * m + c] = mat[idx[r], idx[c]]
    return a


def partial_corr(const double[:, ::1] corr, Py_ssize_t i, Py_ssize_t j, cond):
    cdef Py_ssize_t k = len(cond)
    cdef Py_ssize_t m = k + 2
    cdef Py_ssize_t* idx = <Py_ssize_t*> malloc(m * sizeof(Py_ssize_t))
    cdef Py_ssize_t t
    cdef double* a
    cdef double rcond, b, c
    if idx == NULL:
        raise MemoryError()
    t = 0
    for v in cond:
        idx[t] = v
        t += 1
    idx[k] = i
    idx[k + 1] = j
    a = _gather(corr, idx, m)
    free(idx)
    if a == NULL:
        raise MemoryError()
    with nogil:
        rcond = _cholesky(a, m)
    if rcond == 0.0:
        free(a)
        return NAN, 0.0
    b = a[(m - 1) * m + (m - 2)]
    c = a[(m - 1) * m + (m - 1)]
    free(a)
    return b / sqrt(b * b + c * c), rcond


def logdet_sub(const double[:, ::1] mat, idx_seq):
    cdef Py_ssize_t m = len(idx_seq)
    cdef Py_ssize_t* idx
    cdef Py_ssize_t t
    cdef double* a
    cdef double rcond, acc = 0.0
    if m == 0:
        return 0.0, 1.0
    idx = <Py_ssize_t*> malloc(m * sizeof(Py_ssize_t))
    if idx == NULL:
        raise MemoryError()
    t = 0
    for v in idx_seq:
        idx[t] = v
        t += 1
    a = _gather(mat, idx, m)
    free(idx)
    if a == NULL:
        raise MemoryError()
    with nogil:
        rcond = _cholesky(a, m)
        if rcond != 0.0:
            for t in range(m):
                acc += log(a[t * m + t])
    free(a)
    if rcond == 0.0:
        return NAN, 0.0
    return 2.0 * acc, rcond
