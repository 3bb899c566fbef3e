# -*- coding: utf-8 -*-
import numpy as np
from numba import njit


@njit
def sign_flips(u):
    """+1 / -1 per column of `u`, such that multiplying makes each column's
    largest-magnitude entry positive; first index wins ties.
    """
    signs = np.ones(u.shape[1])
    for j in range(u.shape[1]):
        k = 0
        for i in range(1, u.shape[0]):
            if abs(u[i, j]) > abs(u[k, j]):
                k = i
        if u[k, j] < 0:
            signs[j] = -1.
    return signs


#### Naive kernels ###########################################################
@njit
def multilinear_3(u1, u2, u3, core):
    """(u1, u2, u3) . core by explicit summation; order-3 only.
    Used by the reference Terracini assembly.
    """
    n1, n2, n3 = u1.shape[0], u2.shape[0], u3.shape[0]
    l1, l2, l3 = core.shape
    out = np.zeros((n1, n2, n3))
    for a in range(n1):
        for b in range(n2):
            for c in range(n3):
                acc = 0.
                for i in range(l1):
                    for j in range(l2):
                        for k in range(l3):
                            acc += u1[a, i] * u2[b, j] * u3[c, k] * core[i, j, k]
                out[a, b, c] = acc
    return out


@njit
def unit_matrix(n, l, i, j):
    """n x l matrix with a single one at (i, j)."""
    e = np.zeros((n, l))
    e[i, j] = 1.
    return e
