# -*- coding: utf-8 -*-
import numpy as np
from collections import namedtuple
from scipy import linalg
from .tensor import unfold, mode_product, multilinear_multiply
from .utils import REL_TOL, ORTH_TOL, _process_tensor, _process_matrix
from .utils import fix_signs, gram_deviation


TuckerFactorization = namedtuple('TuckerFactorization',
                                 ['factors', 'core', 'mode_singular_values'])
TuckerFactorization.__doc__ = """Orthogonal Tucker decomposition
`t = (factors[0], ..., factors[D-1]) . core`.

    factors: tuple[np.ndarray]. Orthonormal-column `n_d x l_d` matrices.
    core: np.ndarray. `l_1 x ... x l_D` core, all-orthogonal.
    mode_singular_values: tuple[np.ndarray]. Per mode, row norms of the core's
        unfolding, `sigma_j^d = ||e_j^T core_(d)||`, nonincreasing.
"""


def _mode_basis(m, rel_tol):
    """Sign-fixed left singular vectors of `m` with singular values above
    `rel_tol * sigma_max`.
    """
    u, s, _ = linalg.svd(m, full_matrices=False)
    rank = int(np.sum(s > rel_tol * s[0])) if s[0] > 0 else 0
    return fix_signs(u[:, :rank])[0]


def _mode_singular_values(core):
    return tuple(np.linalg.norm(unfold(core, d), axis=1)
                 for d in range(core.ndim))


def compact_hosvd(t, rel_tol=REL_TOL):
    """Compact higher-order singular value decomposition.

    # Arguments:
        t: np.ndarray
            Nonzero tensor of order D.
        rel_tol: float
            Singular values of each unfolding below `rel_tol * sigma_max` are
            treated as zero and their vectors dropped. `0` keeps every
            positive singular value.

    # Returns:
        TuckerFactorization
            `U_d` span the column space of `t_(d)`; `core = (U_1^T, ...) . t`
            is all-orthogonal. Each singular vector's largest-magnitude entry
            is positive.

    # References:
        1. A Multilinear Singular Value Decomposition. L. De Lathauwer,
        B. De Moor, J. Vandewalle. SIAM J. Matrix Anal. Appl. 21(4), 2000.
    """
    t = _process_tensor(t, allow_zero=False)
    factors = tuple(_mode_basis(unfold(t, d), rel_tol) for d in range(t.ndim))
    core = multilinear_multiply([u.T for u in factors], t)
    return TuckerFactorization(factors, core, _mode_singular_values(core))


def minimal_compress(t, rel_tol=REL_TOL):
    """Sequentially truncated HOSVD: modes are processed in ascending order,
    each SVD acting on the already-truncated core. Same contract as
    `compact_hosvd`, cheaper when the multilinear rank is small.
    """
    core = _process_tensor(t, allow_zero=False)
    factors = []
    for d in range(core.ndim):
        u = _mode_basis(unfold(core, d), rel_tol)
        core = mode_product(core, d, u.T)
        factors.append(u)
    return TuckerFactorization(tuple(factors), core,
                               _mode_singular_values(core))


def orthonormal_complement(u):
    """Orthonormal basis `u_perp` of the orthogonal complement of col(u), so
    that `[u, u_perp]` is orthogonal. Square `u` gives an `n x 0` matrix.
    """
    u = _process_matrix(u, 'u')
    n, k = u.shape
    if k > n:
        raise ValueError("`u` must have at least as many rows as columns "
                         "(got shape %s)" % str(u.shape))
    if gram_deviation(u) > ORTH_TOL:
        raise ValueError("`u` must have orthonormal columns (Gram deviation "
                         "%.3e > %s)" % (gram_deviation(u), ORTH_TOL))
    if k == n:
        return np.zeros((n, 0))
    q, _ = linalg.qr(u, mode='full')
    return fix_signs(q[:, k:])[0]


def multilinear_rank(t, rel_tol=REL_TOL):
    """Per-mode numerical rank of the unfoldings of `t`; all zeros for the
    zero tensor.
    """
    t = _process_tensor(t)
    ranks = []
    for d in range(t.ndim):
        s = linalg.svd(unfold(t, d), compute_uv=False)
        ranks.append(int(np.sum(s > rel_tol * s[0])) if s[0] > 0 else 0)
    return tuple(ranks)


def projector_distance(a, b):
    """Spectral-norm distance between orthogonal projectors onto col(a) and
    col(b); `a`, `b` must have orthonormal columns.
    """
    a, b = _process_matrix(a, 'a'), _process_matrix(b, 'b')
    return float(np.linalg.norm(a @ a.T - b @ b.T, 2))
