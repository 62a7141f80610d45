# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_kernels_py``."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def group_convolve(a, b, add_table):
    cdef const double[::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef const double[::1] bv = np.ascontiguousarray(b, dtype=np.float64)
    cdef const cnp.intp_t[:, ::1] tab = np.ascontiguousarray(add_table, dtype=np.intp)
    cdef Py_ssize_t M = av.shape[0]
    if bv.shape[0] != M or tab.shape[0] != M or tab.shape[1] != M:
        raise ValueError("operand and table sizes disagree")
    out = np.zeros(M)
    cdef double[::1] ov = out
    cdef Py_ssize_t u, v
    cdef double au
    with nogil:
        for u in range(M):
            au = av[u]
            for v in range(M):
                ov[tab[u, v]] += au * bv[v]
    return out


def batch_group_convolve(A, B, sub_table):
    cdef const double[:, ::1] Av = np.ascontiguousarray(A, dtype=np.float64)
    cdef const double[:, ::1] Bv = np.ascontiguousarray(B, dtype=np.float64)
    cdef const cnp.intp_t[:, ::1] sub = np.ascontiguousarray(sub_table, dtype=np.intp)
    cdef Py_ssize_t n = Av.shape[0], M = Av.shape[1]
    if Bv.shape[0] != n or Bv.shape[1] != M or sub.shape[0] != M or sub.shape[1] != M:
        raise ValueError("operand and table sizes disagree")
    out = np.zeros((n, M))
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t i, u, x
    cdef double au
    with nogil:
        for i in range(n):
            for u in range(M):
                au = Av[i, u]
                for x in range(M):
                    ov[i, x] = ov[i, x] + au * Bv[i, sub[x, u]]
    return out
