# -*- coding: utf-8 -*-
import numpy as np
import logging
from .algos import sign_flips


logging.basicConfig(format='')
WARN = lambda msg: logging.warning("WARNING: %s" % msg)
NOTE = lambda msg: logging.info("NOTE: %s" % msg)
EPS = np.finfo(np.float64).eps  # machine epsilon for float64

REL_TOL = 1e-10         # numerical rank, relative to mode-wise sigma_max
ABS_TOL_FACTOR = 1e-14  # ill-posedness, relative to sigma_max of Terracini
ORTH_TOL = 1e-8         # orthonormality / all-orthogonality checks
RESIDUAL_FILTER = 1e-8  # first-order error bound is only trusted below this


class IllPosedError(ValueError):
    """Raised when an operation requires a finite condition number."""


class DocumentError(ValueError):
    """Raised on a malformed decomposition document; the message names the
    offending field, e.g. `terms[1].core.data`.
    """


def _process_tensor(t, name='t', allow_zero=True):
    """Casts `t` to a C-ordered float64 array and validates it as a tensor:
    at least 1D, nonempty, all entries finite (and nonzero if not `allow_zero`).
    """
    if not isinstance(t, (np.ndarray, list, tuple)):
        raise TypeError("`%s` must be a numpy array (got %s)" % (name, type(t)))
    t = np.ascontiguousarray(t, dtype=np.float64)
    if t.ndim < 1 or t.size == 0:
        raise ValueError("`%s` must be a nonempty array of ndim >= 1 "
                         "(got shape %s)" % (name, t.shape))
    if not np.all(np.isfinite(t)):
        raise ValueError("found NaN or inf values in `%s`" % name)
    if not allow_zero and not np.any(t):
        raise ValueError("`%s` can't be the zero tensor" % name)
    return t


def _process_matrix(m, name='m'):
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError("`%s` must be 2D (got shape %s)" % (name, m.shape))
    return m


def _check_mode(mode, ndim):
    if not (isinstance(mode, (int, np.integer)) and 0 <= mode < ndim):
        raise ValueError("`mode` must be an integer in [0, %s) (got %s)" % (
            ndim, mode))
    return int(mode)


def _assert_positive_integer(g, name=''):
    if not (g > 0 and float(g).is_integer()):
        raise ValueError(f"'{name}' must be a positive integer (got {g})")


def _process_dims(dims, name='dims'):
    dims = tuple(int(n) for n in dims)
    if len(dims) == 0:
        raise ValueError(f"`{name}` can't be empty")
    for n in dims:
        _assert_positive_integer(n, name)
    return dims


def gram_deviation(u):
    """max |U^T U - I|; zero for orthonormal columns."""
    u = np.asarray(u)
    return np.max(np.abs(u.T @ u - np.eye(u.shape[1]))) if u.shape[1] else 0.


def fix_signs(u):
    """Flips columns of `u` so each column's largest-magnitude entry is
    positive (ties broken by lowest index). Returns flipped `u` and the signs.
    """
    signs = sign_flips(np.ascontiguousarray(u, dtype=np.float64))
    return u * signs, signs


def relative_difference(a, b):
    """|a - b| / max(|a|, |b|); two infinities (or two zeros) compare equal."""
    if np.isinf(a) or np.isinf(b):
        return 0. if a == b else np.inf
    scale = max(abs(a), abs(b))
    return 0. if scale == 0 else abs(a - b) / scale


def random_orthonormal(rng, n, k):
    """Q-factor of an `n x k` standard normal draw, sign-fixed."""
    q, _ = np.linalg.qr(rng.standard_normal((n, k)))
    return fix_signs(q)[0]
