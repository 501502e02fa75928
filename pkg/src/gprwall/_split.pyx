# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled split-search kernel: a C sweep over presorted candidate columns.

Keeps integer left/right class counts while walking each column in ascending
value order and scores positions where adjacent sorted values differ.  The
arithmetic mirrors _split_py.best_split operation for operation (exact integer
sums of squares, two divisions, one addition, first strict maximum wins) so
the two implementations return bit-identical results.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, NAN

IMPLEMENTATION = "cython"


def best_split(double[:, ::1] values, cnp.intp_t[:, ::1] order, cnp.int64_t[::1] y, int n_classes):
    cdef Py_ssize_t n = values.shape[0]
    cdef Py_ssize_t m = values.shape[1]
    if n < 2:
        return -1, float("nan"), float("inf")

    cdef cnp.int64_t[::1] left = np.zeros(n_classes, dtype=np.int64)
    cdef cnp.int64_t[::1] total = np.zeros(n_classes, dtype=np.int64)
    cdef Py_ssize_t i, j, p, c, idx, idx_next
    for i in range(n):
        total[y[i]] += 1

    cdef double best_score = -INFINITY
    cdef Py_ssize_t best_j = -1
    cdef Py_ssize_t best_p = -1
    cdef double sl2, sr2, score, nl, nr, d

    for j in range(m):
        for c in range(n_classes):
            left[c] = 0
        for p in range(n - 1):
            idx = order[p, j]
            left[y[idx]] += 1
            idx_next = order[p + 1, j]
            if not values[idx_next, j] > values[idx, j]:
                continue  # equal adjacent values: no threshold between them
            sl2 = 0.0
            sr2 = 0.0
            for c in range(n_classes):
                d = <double> left[c]
                sl2 += d * d
                d = <double> (total[c] - left[c])
                sr2 += d * d
            nl = <double> (p + 1)
            nr = <double> (n - p - 1)
            score = sl2 / nl + sr2 / nr
            if score > best_score:
                best_score = score
                best_j = j
                best_p = p

    if best_j < 0:
        return -1, float("nan"), float("inf")
    idx = order[best_p, best_j]
    idx_next = order[best_p + 1, best_j]
    cdef double threshold = 0.5 * (values[idx, best_j] + values[idx_next, best_j])
    return int(best_j), threshold, 1.0 - best_score / (<double> n)
