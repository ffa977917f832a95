# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops for SGD training and pairwise scoring.

Semantics match ``_fallback.py``: gradients of a mini-batch are evaluated at
the parameters of the batch start and applied together at its end. ``reg``
is the per-pair penalty weight on all parameters, so every batch also
applies the decay factor ``1 - 2 * lr * reg`` to every entry of A and M.

The decay of A is kept as a running scalar (A = scale * stored) so a batch
only touches the rows it uses; the batch products go through BLAS dgemm.
"""
import numpy as np
cimport numpy as cnp
from scipy.linalg.cython_blas cimport dgemm

cnp.import_array()

ctypedef cnp.int64_t i64


cdef inline void _gemm(char ta, char tb, int m, int n, int k,
                       double *a, int lda, double *b, int ldb, double *c, int ldc) noexcept nogil:
    # column-major C (m x n) = op(a) op(b)
    cdef double one = 1.0, zero = 0.0
    dgemm(&ta, &tb, &m, &n, &k, &one, a, &lda, b, &ldb, &zero, c, &ldc)


def sgd_epoch(double[:, ::1] A, double[:, :, ::1] M,
              i64[::1] subs, i64[::1] objs, double[::1] labels,
              i64[::1] order, double lr, double reg, Py_ssize_t batch_size):
    cdef Py_ssize_t V = A.shape[0], d = A.shape[1], R = M.shape[0]
    cdef Py_ssize_t n = order.shape[0]
    if R != 2:
        raise ValueError("sgd_epoch expects exactly two relation matrices")
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")

    gA_np = np.zeros((V, d), dtype=np.float64)
    touched_np = np.zeros(V, dtype=np.uint8)
    rows_np = np.empty(2 * batch_size, dtype=np.int64)
    Av_np = np.empty((batch_size, d), dtype=np.float64)
    Aw_np = np.empty((batch_size, d), dtype=np.float64)
    U_np = np.empty((batch_size, d), dtype=np.float64)
    Z_np = np.empty((batch_size, d), dtype=np.float64)
    gM_np = np.empty((2, d, d), dtype=np.float64)
    cdef double[:, ::1] gA = gA_np
    cdef unsigned char[::1] touched = touched_np
    cdef i64[::1] rows = rows_np
    cdef double[:, ::1] Av = Av_np
    cdef double[:, ::1] Aw = Aw_np
    cdef double[:, ::1] U = U_np
    cdef double[:, ::1] Z = Z_np
    cdef double[:, :, ::1] gM = gM_np

    cdef Py_ssize_t start, stop, k, p, v, w, r, i, j, nrows, b
    cdef double y, target, s, res, step, g2, inv, total = 0.0
    cdef double decay = 1.0 - 2.0 * lr * reg
    # lazy decay needs a positive factor; otherwise rescale eagerly
    cdef bint lazy = decay > 0.0
    cdef double scale = 1.0
    cdef int di = <int>d

    with nogil:
        start = 0
        while start < n:
            stop = start + batch_size
            if stop > n:
                stop = n
            b = stop - start
            for k in range(b):
                p = order[start + k]
                v = subs[p]
                w = objs[p]
                for i in range(d):
                    Av[k, i] = scale * A[v, i]
                    Aw[k, i] = scale * A[w, i]
            nrows = 0
            for r in range(2):
                # Z = Av M_r, U = Aw M_r^T  (row-major, hence the swapped operands)
                _gemm(b'N', b'N', di, <int>b, di, &M[r, 0, 0], di, &Av[0, 0], di, &Z[0, 0], di)
                _gemm(b'T', b'N', di, <int>b, di, &M[r, 0, 0], di, &Aw[0, 0], di, &U[0, 0], di)
                for k in range(b):
                    p = order[start + k]
                    v = subs[p]
                    w = objs[p]
                    y = labels[p]
                    target = y if r == 1 else 1.0 - y
                    s = 0.0
                    for i in range(d):
                        s = s + Av[k, i] * U[k, i]
                    res = s - target
                    total = total + res * res
                    g2 = 2.0 * res
                    for i in range(d):
                        gA[v, i] = gA[v, i] + g2 * U[k, i]
                        gA[w, i] = gA[w, i] + g2 * Z[k, i]
                    # U is free now: keep 2 res a_v for the M gradient
                    for i in range(d):
                        U[k, i] = g2 * Av[k, i]
                    if r == 0:
                        if not touched[v]:
                            touched[v] = 1
                            rows[nrows] = v
                            nrows = nrows + 1
                        if not touched[w]:
                            touched[w] = 1
                            rows[nrows] = w
                            nrows = nrows + 1
                # gM_r = (2 res Av)^T Aw
                _gemm(b'N', b'T', di, di, <int>b, &Aw[0, 0], di, &U[0, 0], di, &gM[r, 0, 0], di)

            step = lr / b
            if lazy:
                scale = scale * decay
                inv = step / scale
            else:
                for v in range(V):
                    for i in range(d):
                        A[v, i] = A[v, i] * decay
                inv = step
            for k in range(nrows):
                v = rows[k]
                for i in range(d):
                    A[v, i] = A[v, i] - inv * gA[v, i]
                    gA[v, i] = 0.0
                touched[v] = 0
            for r in range(2):
                for i in range(d):
                    for j in range(d):
                        M[r, i, j] = M[r, i, j] * decay - step * gM[r, i, j]
            if scale < 1e-100:
                for v in range(V):
                    for i in range(d):
                        A[v, i] = A[v, i] * scale
                scale = 1.0
            start = stop
        if scale != 1.0:
            for v in range(V):
                for i in range(d):
                    A[v, i] = A[v, i] * scale
    return total


def bilinear_pairs(double[:, ::1] A, double[:, ::1] D, i64[::1] subs, i64[::1] objs):
    """a_v^T D a_w for every aligned (v, w)."""
    cdef double[:, ::1] AD = np.ascontiguousarray(np.dot(A, D))
    cdef Py_ssize_t n = subs.shape[0], d = A.shape[1], k, i, v, w
    cdef double s
    out_np = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_np
    with nogil:
        for k in range(n):
            v = subs[k]
            w = objs[k]
            s = 0.0
            for i in range(d):
                s = s + AD[v, i] * A[w, i]
            out[k] = s
    return out_np
