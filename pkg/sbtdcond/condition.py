# -*- coding: utf-8 -*-
import numpy as np
from collections import namedtuple
from time import perf_counter
from scipy import linalg
from .algos import multilinear_3, unit_matrix
from .sbtd import Sbtd, canonicalize, canonicalize_hosvd
from .sbtd import core_tangent_basis
from .tensor import unfold, kron, multilinear_multiply
from .tucker import orthonormal_complement
from .utils import ABS_TOL_FACTOR, ORTH_TOL, REL_TOL, gram_deviation, NOTE


TerraciniMatrix = namedtuple('TerraciniMatrix',
                             ['matrix', 'column_blocks', 'block_sizes'])
TerraciniMatrix.__doc__ = """Concatenated orthonormal tangent bases.

    matrix: np.ndarray [prod(dims) x sum_r dim(M_r)]
    column_blocks: list[(start, stop)]. Columns of term `r`.
    block_sizes: list[(core_size, tuple[mode sizes])]. Per term,
        `|B_C|` and `l_d * (n_d - l_d)` for each mode.
"""

ConditionReport = namedtuple(
    'ConditionReport', ['kappa', 'sigma_min', 'method', 'ill_posed',
                        'terracini_shape', 'compressed_dims', 'wall_time'])
ConditionReport.__doc__ = """Condition number of an SBTD.

    kappa: float. `1 / sigma_min`, or `np.inf` if `ill_posed`.
    sigma_min: float. Smallest singular value of the Terracini matrix.
    method: str['direct', 'compressed'].
    ill_posed: bool. `sigma_min < abs_tol`.
    terracini_shape: (int, int). Shape of the matrix whose SVD was taken.
    compressed_dims: tuple[int] / None. Ambient dims after compression.
    wall_time: float. Seconds.
"""


#### Tangent spaces ##########################################################
def _check_hosvd_form(term):
    for d, u in enumerate(term.factors):
        if gram_deviation(u) > ORTH_TOL:
            raise ValueError("`factors[%s]` is not orthonormal (Gram deviation "
                             "%.3e); canonicalize first" % (
                                 d, gram_deviation(u)))
    scale = max(np.sum(term.core**2), np.finfo(np.float64).tiny)
    for d in range(term.order):
        cd = unfold(term.core, d)
        gram = cd @ cd.T
        off = np.max(np.abs(gram - np.diag(np.diag(gram)))) / scale
        if off > ORTH_TOL:
            raise ValueError("core is not all-orthogonal in mode %s (relative "
                             "deviation %.3e); canonicalize first" % (d, off))


def _fold_columns(block, mode, dims):
    """`block[k]` is the mode-`mode` unfolding (as `n_mode x rest`) of the
    k-th tensor; returns the tensors vectorized as columns.
    """
    rest = dims[:mode] + dims[mode + 1:]
    block = block.reshape((block.shape[0], dims[mode]) + rest)
    block = np.moveaxis(block, 1, mode + 1)
    return block.reshape(block.shape[0], int(np.prod(dims))).T


def term_tangent_basis(term):
    """Orthonormal basis of the tangent space to the structured Tucker
    manifold at `term`, which must be in HOSVD form (`canonicalize_hosvd`).

    Columns are the vectorized tensors
        (U_1, ..., U_D) . C'                        for C' in the core basis,
        (U_1, .., U_d^perp e_i u_j^T, .., U_D) . C  for d, j, i,
    with `u_j = e_j / sigma_j^d` and `sigma_j^d = ||e_j^T C_(d)||`; ordered
    core block first, then modes ascending, `j` outer, `i` inner.

    # Returns:
        basis: np.ndarray [prod(n) x (|B_C| + sum_d l_d (n_d - l_d))]
        block_sizes: (int, tuple[int])
    """
    _check_hosvd_form(term)
    dims = term.dims
    core_basis = core_tangent_basis(term.structure, term.core)
    core_mat = np.stack([b.ravel() for b in core_basis], axis=1)
    columns = [kron(*term.factors) @ core_mat]

    mode_sizes = []
    for d in range(term.order):
        sigma = np.linalg.norm(unfold(term.core, d), axis=1)
        if np.any(sigma == 0):
            raise ValueError("core is rank-deficient in mode %s" % d)
        perp = orthonormal_complement(term.factors[d])
        others = [None if d2 == d else u for d2, u in enumerate(term.factors)]
        y = unfold(multilinear_multiply(others, term.core), d)

        for j in range(term.ranks[d]):
            block = perp.T[:, :, None] * (y[j] / sigma[j])[None, None, :]
            columns.append(_fold_columns(block, d, dims))
        mode_sizes.append(perp.shape[1] * term.ranks[d])
    return np.hstack(columns), (len(core_basis), tuple(mode_sizes))


def assemble_terracini(s, rel_tol=REL_TOL):
    """Terracini matrix `[T_1 ... T_R]` of `s`; every term is re-canonicalized
    to HOSVD form first.
    """
    blocks, column_blocks, block_sizes = [], [], []
    start = 0
    for term in s:
        basis, sizes = term_tangent_basis(canonicalize_hosvd(term, rel_tol))
        blocks.append(basis)
        column_blocks.append((start, start + basis.shape[1]))
        block_sizes.append(sizes)
        start += basis.shape[1]
    return TerraciniMatrix(np.hstack(blocks), column_blocks, block_sizes)


#### Condition numbers #######################################################
def sigma_min(m):
    """The min(rows, cols)-th singular value of `m`, via dense SVD."""
    m = np.asarray(m, dtype=np.float64)
    if m.size == 0:
        raise ValueError("`m` can't be empty (got shape %s)" % str(m.shape))
    return float(linalg.svd(m, compute_uv=False)[-1])


def _report(matrix, method, abs_tol, compressed_dims, t0):
    s = linalg.svd(matrix, compute_uv=False)
    # more columns than rows means a nontrivial kernel
    smin = float(s[-1]) if matrix.shape[1] <= matrix.shape[0] else 0.
    abs_tol = ABS_TOL_FACTOR * s[0] if abs_tol is None else abs_tol
    ill_posed = bool(smin < abs_tol)
    return ConditionReport(kappa=np.inf if ill_posed else 1 / smin,
                           sigma_min=smin, method=method, ill_posed=ill_posed,
                           terracini_shape=matrix.shape,
                           compressed_dims=compressed_dims,
                           wall_time=perf_counter() - t0)


def condition_direct(s, abs_tol=None, rel_tol=REL_TOL):
    """Condition number `1 / sigma_min(T)` of the SBTD `s`, with `T` its full
    Terracini matrix.

    # Arguments:
        s: Sbtd
            Valid decomposition.
        abs_tol: float / None
            `sigma_min` below this flags the problem ill-posed (kappa = inf).
            Default `1e-14 * sigma_max(T)`.
        rel_tol: float
            Rank tolerance used when canonicalizing terms.

    # Returns:
        ConditionReport
    """
    t0 = perf_counter()
    terracini = assemble_terracini(s, rel_tol)
    return _report(terracini.matrix, 'direct', abs_tol, None, t0)


def compress_sbtd(s):
    """Compression step of the fast algorithm: per mode, `Q_d` is the Q-factor
    of the stacked factors `[U_d^1, ..., U_d^R]`, and every factor becomes
    `Q_d^T U_d^r`. Modes where the stacked factors have at least `n_d` columns
    are left uncompressed (`Q_d = None`).

    # Returns:
        compressed: Sbtd
        qs: list[np.ndarray / None]
    """
    qs = []
    for d, n in enumerate(s.dims):
        stacked = np.hstack([term.factors[d] for term in s])
        if stacked.shape[1] < n:
            q, _ = linalg.qr(stacked, mode='economic')
            qs.append(q)
        else:
            qs.append(None)
    terms = [term.replace(factors=[u if q is None else q.T @ u
                                   for q, u in zip(qs, term.factors)])
             for term in s]
    return Sbtd(terms), qs


def condition_compressed(s, abs_tol=None, rel_tol=REL_TOL):
    """Condition number via Tucker compression: the SBTD is compressed to the
    span of its stacked factors (`compress_sbtd`) and `condition_direct` is
    applied to the result. Equal to `condition_direct(s)` in exact
    arithmetic, since the condition number is invariant under orthogonal
    Tucker compression. Cost scales with `(sum_r l_d^r)` instead of `n_d`.
    """
    t0 = perf_counter()
    compressed, qs = compress_sbtd(s)
    terracini = assemble_terracini(compressed, rel_tol)
    NOTE("compressed %s -> %s" % (s.dims, compressed.dims))
    return _report(terracini.matrix, 'compressed', abs_tol, compressed.dims, t0)


def condition_number(s, method='compressed', abs_tol=None, rel_tol=REL_TOL):
    if method not in ('direct', 'compressed'):
        raise ValueError("`method` must be one of: direct, compressed "
                         "(got %s)" % method)
    fn = condition_direct if method == 'direct' else condition_compressed
    return fn(s, abs_tol=abs_tol, rel_tol=rel_tol)


#### Bounds and special cases ################################################
def btd_lower_bound(s, abs_tol=None, rel_tol=REL_TOL):
    """Lower bound `1 / sigma_min([U_1^r ⊗ ... ⊗ U_D^r]_r) <= kappa^BTD(s)`,
    with terms in HOSVD form. `np.inf` if that matrix is (numerically)
    rank-deficient.

    Computed on the compressed decomposition; orthonormal `Q_d` leave the
    singular values of the stacked Kronecker blocks unchanged.
    """
    compressed, _ = compress_sbtd(canonicalize(s, rel_tol))
    compressed = canonicalize(compressed, rel_tol)
    k = np.hstack([kron(*term.factors) for term in compressed])
    sv = linalg.svd(k, compute_uv=False)
    smin = sv[-1] if k.shape[1] <= k.shape[0] else 0.
    abs_tol = ABS_TOL_FACTOR * sv[0] if abs_tol is None else abs_tol
    return np.inf if smin < abs_tol else float(1 / smin)


def check_pairwise_orthogonal(s, tol=1e-10, rel_tol=REL_TOL):
    """True iff `(U_d^r1)^T U_d^r2` vanishes (within `tol`) for every mode and
    every pair of distinct terms, i.e. the SBTD is odeco-like (kappa = 1).
    """
    s = canonicalize(s, rel_tol)
    for r1 in range(len(s)):
        for r2 in range(r1 + 1, len(s)):
            for u1, u2 in zip(s[r1].factors, s[r2].factors):
                if np.max(np.abs(u1.T @ u2)) > tol:
                    return False
    return True


def cost_model(n, D, R, l):
    """Leading-order arithmetic cost (unit constants) of the direct and the
    compressed condition number computation, for `R` terms of multilinear
    rank `(l, ..., l)` in `R^{n x ... x n}`.

    # Returns:
        direct_ops: int
            n^D R^2 l^2D + n^D R^2 D^2 l^2 (n - l)^2
        compressed_ops: int
            D n R^2 l^2 + R^(D+2) l^3D + R^(D+4) l^(D+4) D^2
    """
    for name, v in dict(n=n, D=D, R=R, l=l).items():
        if not (v > 0 and float(v).is_integer()):
            raise ValueError(f"'{name}' must be a positive integer (got {v})")
    n, D, R, l = int(n), int(D), int(R), int(l)
    direct = n**D * R**2 * l**(2*D) + n**D * R**2 * D**2 * l**2 * (n - l)**2
    compressed = (D * n * R**2 * l**2 + R**(D + 2) * l**(3*D)
                  + R**(D + 4) * l**(D + 4) * D**2)
    return direct, compressed


#### Reference implementation ################################################
def _term_span_reference(term):
    """Orthonormal basis of the tangent space at `term` (order 3), from the
    spanning set of all first-order variations of core and factors, each
    tensor built by explicit summation.
    """
    u1, u2, u3 = [np.ascontiguousarray(u) for u in term.factors]
    core = np.ascontiguousarray(term.core)
    spanning = []
    for c in core_tangent_basis(term.structure, core):
        spanning.append(multilinear_3(u1, u2, u3, np.ascontiguousarray(c)))
    for d in range(3):
        n, l = term.factors[d].shape
        for i in range(n):
            for j in range(l):
                us = [u1, u2, u3]
                us[d] = unit_matrix(n, l, i, j)
                spanning.append(multilinear_3(us[0], us[1], us[2], core))
    spanning = np.stack([x.ravel() for x in spanning], axis=1)

    dim = len(core_tangent_basis(term.structure, core)) + sum(
        l * (n - l) for n, l in zip(term.dims, term.ranks))
    u, *_ = linalg.svd(spanning, full_matrices=False)
    return u[:, :dim]


def terracini_reference(s):
    """Independent `sigma_min` of the Terracini matrix of an order-3 SBTD:
    no HOSVD, no complements; per-term tangent spaces are orthonormalized
    from explicit spanning tensors and `sigma_min` is the square root of the
    smallest eigenvalue of the Gram matrix. Small inputs only.
    """
    if len(s.dims) != 3:
        raise ValueError("reference assembly supports order 3 only (got %s)"
                         % len(s.dims))
    t = np.hstack([_term_span_reference(term) for term in s])
    if t.shape[1] > t.shape[0]:
        return 0.
    return float(np.sqrt(max(linalg.eigvalsh(t.T @ t)[0], 0.)))
