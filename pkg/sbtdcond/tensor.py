# -*- coding: utf-8 -*-
"""Dense multilinear algebra on C-ordered float64 arrays.

Conventions:
    - linear storage order is C order ("last index fastest");
    - `unfold(t, d)` has rows indexed by mode `d` and columns enumerating the
      remaining modes in ascending order, last one fastest. With this choice
              unfold((U_1, ..., U_D) . C, d)
            = U_d @ unfold(C, d) @ kron(U_1, .., U_{d-1}, U_{d+1}, .., U_D).T
      holds verbatim, and `vec(t) = kron(U_1, ..., U_D) @ vec(C)`.
    - modes are 0-based, like numpy axes.
"""
import numpy as np
from functools import reduce
from .utils import _process_tensor, _process_matrix, _check_mode


def unfold(t, mode):
    """Mode-`mode` unfolding (matricization) of `t`.

    # Arguments:
        t: np.ndarray
            Tensor of order D >= 1.
        mode: int
            Mode index in [0, D).

    # Returns:
        m: np.ndarray [n_mode x prod(other dims)]
            Row `i` holds all entries with index `i` along `mode`; columns
            enumerate remaining modes in ascending order, last fastest.
    """
    t = _process_tensor(t)
    mode = _check_mode(mode, t.ndim)
    return np.moveaxis(t, mode, 0).reshape(t.shape[mode], -1)


def fold(m, mode, dims):
    """Inverse of `unfold`: `fold(unfold(t, d), d, t.shape)` is `t`, bitwise."""
    m = _process_matrix(m)
    dims = tuple(int(n) for n in dims)
    mode = _check_mode(mode, len(dims))
    rest = dims[:mode] + dims[mode + 1:]
    if m.shape != (dims[mode], int(np.prod(rest, dtype=np.int64))):
        raise ValueError("`m` of shape %s can't be folded along mode %s into "
                         "%s" % (m.shape, mode, dims))
    t = np.moveaxis(m.reshape((dims[mode],) + rest), 0, mode)
    return np.ascontiguousarray(t)


def kron(*mats):
    """Kronecker product `mats[0] ⊗ mats[1] ⊗ ...`; the first factor's index
    varies slowest, consistent with C-order vectorization.
    """
    if len(mats) == 0:
        raise ValueError("need at least one matrix")
    mats = [_process_matrix(m, 'mats[%s]' % i) for i, m in enumerate(mats)]
    rows = reduce(lambda a, b: a * b, [m.shape[0] for m in mats], 1)
    cols = reduce(lambda a, b: a * b, [m.shape[1] for m in mats], 1)
    if rows * cols > np.iinfo(np.intp).max:
        raise OverflowError("Kronecker product of shape (%s, %s) overflows "
                            "addressable size" % (rows, cols))
    return reduce(np.kron, mats)


def mode_product(t, mode, m):
    """Mode-`mode` product `t ×_mode m`, i.e. `fold(m @ unfold(t, mode))`.

    # Arguments:
        t: np.ndarray. Tensor of order D.
        mode: int. Mode index in [0, D).
        m: np.ndarray [p x t.shape[mode]].

    # Returns:
        np.ndarray, same as `t` except `shape[mode] == p`.
    """
    t = _process_tensor(t)
    mode = _check_mode(mode, t.ndim)
    m = _process_matrix(m)
    if m.shape[1] != t.shape[mode]:
        raise ValueError("`m.shape[1]` must equal `t.shape[%s]` "
                         "(got %s, %s)" % (mode, m.shape[1], t.shape[mode]))
    out = np.tensordot(m, t, axes=(1, mode))  # new axis first
    return np.ascontiguousarray(np.moveaxis(out, 0, mode))


def multilinear_multiply(mats, t):
    """Multilinear multiplication `(M_1, ..., M_D) . t`, i.e. `M_d` applied
    along every mode `d`. `None` entries act as identities.
    """
    t = _process_tensor(t)
    if len(mats) != t.ndim:
        raise ValueError("need one matrix per mode (got %s for order %s)" % (
            len(mats), t.ndim))
    for mode, m in enumerate(mats):
        if m is not None:
            t = mode_product(t, mode, m)
    return t


def inner(a, b):
    """Euclidean (Frobenius) inner product of two tensors of equal shape."""
    a, b = _process_tensor(a, 'a'), _process_tensor(b, 'b')
    if a.shape != b.shape:
        raise ValueError("shape mismatch: %s vs %s" % (a.shape, b.shape))
    return float(np.dot(a.ravel(), b.ravel()))


def norm(a):
    return float(np.linalg.norm(_process_tensor(a, 'a').ravel()))
