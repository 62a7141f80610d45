"""Pure numpy implementations of the hot kernels.

These mirror ``_ckernels.pyx`` operation for operation (same summation
order) so both backends agree to the last bit on the same platform.
"""
import numpy as np


def group_convolve(a, b, add_table):
    """out[add_table[u, v]] += a[u] * b[v] over all pairs (u, v)."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    M = a.shape[0]
    if b.shape != (M,) or add_table.shape != (M, M):
        raise ValueError("operand and table sizes disagree")
    out = np.zeros(M)
    for u in range(M):
        if a[u] != 0.0:
            out[add_table[u]] += a[u] * b
    return out


def batch_group_convolve(A, B, sub_table):
    """Row-wise group convolution: out[n, x] = sum_u A[n, u] * B[n, x - u].

    ``sub_table[x, u]`` must hold the index of ``x - u``.
    """
    A = np.ascontiguousarray(A, dtype=np.float64)
    B = np.ascontiguousarray(B, dtype=np.float64)
    n, M = A.shape
    if B.shape != (n, M) or sub_table.shape != (M, M):
        raise ValueError("operand and table sizes disagree")
    out = np.zeros((n, M))
    for u in range(M):
        out += A[:, u:u + 1] * B[:, sub_table[:, u]]
    return out
