# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the numpy kernels in _pykernels.py.

Matrix products stay in BLAS (through numpy); the compiled code fuses the
passes where scalar C wins: allocation-free top-k selection over similarity
blocks, diagonal-excluding row minima, and the early-exit radius scan.
Same contracts as the fallback: row-normalized float64 C-contiguous inputs.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

DEF BLOCK_ROWS = 2048


cdef double _topk_mean(const double[:, ::1] sims, Py_ssize_t row,
                       Py_ssize_t k, double* buf) nogil:
    """Mean of the k largest entries in sims[row]; buf holds k doubles."""
    cdef Py_ssize_t m = sims.shape[1]
    cdef Py_ssize_t filled = 0
    cdef Py_ssize_t j, pos
    cdef double v, total
    for j in range(m):
        v = sims[row, j]
        if filled < k:
            pos = filled
            while pos > 0 and buf[pos - 1] > v:
                buf[pos] = buf[pos - 1]
                pos -= 1
            buf[pos] = v
            filled += 1
        elif v > buf[0]:
            pos = 1
            while pos < k and buf[pos] < v:
                buf[pos - 1] = buf[pos]
                pos += 1
            buf[pos - 1] = v
    total = 0.0
    for j in range(filled):
        total += buf[j]
    return total / filled


def topk_margins(const double[:, ::1] x, const double[:, ::1] pos,
                 const double[:, ::1] neg, int k):
    xa = np.asarray(x)
    pos_t = np.asarray(pos).T
    neg_t = np.asarray(neg).T
    cdef Py_ssize_t n = xa.shape[0]
    cdef Py_ssize_t kp = min(<Py_ssize_t> k, pos.shape[0])
    cdef Py_ssize_t kn = min(<Py_ssize_t> k, neg.shape[0])
    cdef Py_ssize_t kmax = kp if kp > kn else kn
    out_arr = np.empty(n, dtype=np.float64)
    buf_arr = np.empty(kmax if kmax > 0 else 1, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double[::1] buf = buf_arr
    cdef const double[:, ::1] pl
    cdef const double[:, ::1] nl
    cdef Py_ssize_t start, stop, i
    for start in range(0, n, BLOCK_ROWS):
        stop = min(start + BLOCK_ROWS, n)
        pl_arr = xa[start:stop] @ pos_t  # BLAS
        nl_arr = xa[start:stop] @ neg_t
        pl = pl_arr
        nl = nl_arr
        with nogil:
            for i in range(stop - start):
                out[start + i] = (_topk_mean(pl, i, kp, &buf[0])
                                  - _topk_mean(nl, i, kn, &buf[0]))
    return out_arr


def nearest_other_sqdists(const double[:, ::1] points):
    pts = np.asarray(points)
    cdef Py_ssize_t n = pts.shape[0]
    sq_arr = np.einsum("ij,ij->i", pts, pts)
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] sq = sq_arr
    cdef double[::1] out = out_arr
    cdef const double[:, ::1] gram
    cdef Py_ssize_t start, stop, i, j, gi
    cdef double best, d2
    for start in range(0, n, BLOCK_ROWS):
        stop = min(start + BLOCK_ROWS, n)
        gram_arr = pts[start:stop] @ pts.T  # BLAS
        gram = gram_arr
        with nogil:
            for i in range(stop - start):
                gi = start + i
                best = -1.0
                for j in range(n):
                    if j == gi:
                        continue
                    d2 = sq[gi] + sq[j] - 2.0 * gram[i, j]
                    if best < 0.0 or d2 < best:
                        best = d2
                out[gi] = best if best > 0.0 else 0.0
    return out_arr


def coverage_hits(const double[:, ::1] real, const double[:, ::1] syn, double radius):
    """Early-exit radius scan: stop at the first synthetic point within range."""
    cdef Py_ssize_t n = real.shape[0]
    cdef Py_ssize_t m = syn.shape[0]
    cdef Py_ssize_t d = real.shape[1]
    if m == 0:
        return 0
    cdef double r2 = radius * radius
    cdef Py_ssize_t i, j, t
    cdef double acc, diff
    cdef long hits = 0
    with nogil:
        for i in range(n):
            for j in range(m):
                acc = 0.0
                for t in range(d):
                    diff = real[i, t] - syn[j, t]
                    acc += diff * diff
                    if acc > r2:
                        break
                if acc <= r2:
                    hits += 1
                    break
    return hits
