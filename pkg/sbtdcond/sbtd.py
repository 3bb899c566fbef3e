# -*- coding: utf-8 -*-
import numpy as np
from collections import namedtuple
from scipy import linalg
from scipy.optimize import linear_sum_assignment
from .tensor import multilinear_multiply, mode_product, norm
from .tucker import compact_hosvd, multilinear_rank
from .utils import REL_TOL, _process_tensor, _process_matrix, _process_dims
from .utils import fix_signs


class CoreStructure():
    """Tucker core structure: the manifold a term's core lives on, and an
    orthonormal basis of its tangent space at a given core.

    _______________________________________________________________________
    Structure     Core manifold                         Tangent basis

    full          full-multilinear-rank tensors         canonical basis
                  (open subset of R^{l_1 x..x l_D})     (prod(l) unit tensors)
    rank1         R \\ {0}, all l_d = 1                  {1}
    _______________________________________________________________________

    Any other GL-invariant structure can be passed as a function mapping a
    core to a list of orthonormal tangent tensors (same shape as the core).

    # Example:
        CoreStructure('rank1')(np.array([[[2.]]]))  # -> [array([[[1.]]])]
    """
    SUPPORTED = ('full', 'rank1')
    def __init__(self, structure='full'):
        if isinstance(structure, CoreStructure):
            self.fn, self.name = structure.fn, structure.name
            return
        elif callable(structure):
            self.fn = structure
            self.name = structure.__qualname__
            return

        if not isinstance(structure, str):
            raise TypeError("`structure` must be one of: (1) name of a "
                            "supported structure; (2) `CoreStructure`; (3) "
                            "function mapping core to tangent basis "
                            "(got: %s)" % str(structure))
        if structure not in CoreStructure.SUPPORTED:
            raise ValueError("structure '%s' is not supported; use one of: %s"
                             % (structure, ', '.join(CoreStructure.SUPPORTED)))
        self.fn = _full_basis if structure == 'full' else _rank1_basis
        self.name = structure

    def __call__(self, core):
        return self.fn(_process_tensor(core, 'core'))

    @property
    def builtin(self):
        return self.name in CoreStructure.SUPPORTED

    def __eq__(self, other):
        return isinstance(other, CoreStructure) and self.fn is other.fn

    def __repr__(self):
        return "CoreStructure('%s')" % self.name


def _full_basis(core):
    eye = np.eye(core.size)
    return [eye[i].reshape(core.shape) for i in range(core.size)]


def _rank1_basis(core):
    if core.size != 1 or core.ravel()[0] == 0:
        raise ValueError("rank1 structure needs a nonzero 1 x .. x 1 core "
                         "(got shape %s)" % str(core.shape))
    return [np.ones(core.shape)]


def core_tangent_basis(structure, core):
    """Orthonormal basis (list of tensors shaped like `core`) of the tangent
    space of `structure`'s core manifold at `core`.
    """
    return CoreStructure(structure)(core)


def _readonly(a):
    a = np.array(a, dtype=np.float64, order='C')
    a.setflags(write=False)
    return a


class TuckerTerm():
    """One structured Tucker summand `(U_1, ..., U_D) . C`.

    # Arguments:
        factors: list[np.ndarray]
            `n_d x l_d` factor matrices, expected full column rank.
        core: np.ndarray
            `l_1 x ... x l_D` core tensor. A scalar is accepted for order-D
            rank-1 terms and reshaped to `1 x ... x 1`.
        structure: str / CoreStructure / function
            Core structure tag; see `CoreStructure`.

    Only shapes are checked on construction; rank conditions are reported by
    `validate`.
    """
    def __init__(self, factors, core, structure='full'):
        factors = [_process_matrix(u, 'factors[%s]' % d)
                   for d, u in enumerate(factors)]
        if len(factors) == 0:
            raise ValueError("`factors` can't be empty")
        core = np.asarray(core, dtype=np.float64)
        if core.ndim == 0:
            core = core.reshape((1,) * len(factors))
        if core.ndim != len(factors):
            raise ValueError("`core` must have one mode per factor (got "
                             "core.ndim=%s, %s factors)" % (core.ndim,
                                                            len(factors)))
        for d, u in enumerate(factors):
            if u.shape[1] != core.shape[d]:
                raise ValueError("`factors[%s]` has %s columns but core mode "
                                 "%s has size %s" % (d, u.shape[1], d,
                                                     core.shape[d]))
        self.factors = tuple(_readonly(u) for u in factors)
        self.core = _readonly(core)
        self.structure = CoreStructure(structure)

    @property
    def dims(self):
        return tuple(u.shape[0] for u in self.factors)

    @property
    def ranks(self):
        return self.core.shape

    @property
    def order(self):
        return len(self.factors)

    def to_tensor(self):
        return multilinear_multiply(self.factors, self.core)

    def replace(self, factors=None, core=None):
        return TuckerTerm(self.factors if factors is None else factors,
                          self.core if core is None else core, self.structure)

    def __repr__(self):
        return "TuckerTerm(dims=%s, ranks=%s, structure=%s)" % (
            self.dims, self.ranks, self.structure.name)


class Sbtd():
    """Structured block term decomposition: an ordered list of `TuckerTerm`s
    sharing ambient dimensions, representing their sum.
    """
    def __init__(self, terms, dims=None):
        terms = list(terms)
        if len(terms) == 0:
            raise ValueError("an SBTD needs at least one term")
        for r, term in enumerate(terms):
            if not isinstance(term, TuckerTerm):
                raise TypeError("`terms[%s]` must be a TuckerTerm (got %s)" % (
                    r, type(term)))
        dims = terms[0].dims if dims is None else _process_dims(dims)
        for r, term in enumerate(terms):
            if term.dims != dims:
                raise ValueError("`terms[%s]` has dims %s, expected %s" % (
                    r, term.dims, dims))
        self.terms = tuple(terms)
        self.dims = dims

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def __getitem__(self, r):
        return self.terms[r]

    def __repr__(self):
        return "Sbtd(dims=%s, terms=[%s])" % (
            self.dims, ', '.join("%s:%s" % (t.structure.name, t.ranks)
                                 for t in self.terms))


def evaluate_sum(s):
    """Sum of all terms of `s` as a dense tensor."""
    out = np.zeros(s.dims)
    for term in s:
        out += term.to_tensor()
    return out


#### Validation ##############################################################
ValidationReport = namedtuple('ValidationReport',
                              ['ok', 'factor_ranks', 'core_ranks', 'failures'])


def _column_rank(u, rel_tol):
    s = linalg.svd(u, compute_uv=False)
    return int(np.sum(s > rel_tol * s[0])) if s.size and s[0] > 0 else 0


def validate(s, rel_tol=REL_TOL):
    """Checks the rank conditions of every term; never raises on them.

    # Returns:
        ValidationReport
            ok: bool. True iff `failures` is empty.
            factor_ranks: list[tuple]. Numerical column rank per term, mode.
            core_ranks: list[tuple]. Multilinear rank of each core.
            failures: list[str]. One message per violated condition.
    """
    failures, factor_ranks, core_ranks = [], [], []
    for r, term in enumerate(s):
        franks = tuple(_column_rank(u, rel_tol) for u in term.factors)
        cranks = multilinear_rank(term.core, rel_tol)
        factor_ranks.append(franks)
        core_ranks.append(cranks)
        for d, (fr, l) in enumerate(zip(franks, term.ranks)):
            if fr != l:
                failures.append("terms[%s].factors[%s]: rank %s < %s columns"
                                % (r, d, fr, l))
        if cranks != term.ranks:
            failures.append("terms[%s].core: multilinear rank %s != %s"
                            % (r, cranks, term.ranks))
        if term.structure.name == 'rank1' and (
                term.core.size != 1 or term.core.ravel()[0] == 0):
            failures.append("terms[%s].core: rank1 needs a nonzero scalar core "
                            "(got shape %s)" % (r, term.ranks))
    if not np.all(np.isfinite(evaluate_sum(s))):
        failures.append("sum is not finite")
    return ValidationReport(len(failures) == 0, factor_ranks, core_ranks,
                            failures)


def _validate_term(term, rel_tol=REL_TOL):
    report = validate(Sbtd([term]), rel_tol)
    if not report.ok:
        raise ValueError("invalid term: " + '; '.join(report.failures))


#### HOSVD form ##############################################################
def canonicalize_hosvd(term, rel_tol=REL_TOL):
    """Equivalent term in HOSVD form: orthonormal factors, all-orthogonal core
    with nonincreasing mode-wise row norms, sign convention applied.

    Factors are first orthonormalized by QR, `U_d = Q_d R_d`, the triangular
    parts absorbed into the core, and the small core rotated by its own HOSVD.
    The structure tag is kept; core structures are GL-invariant.
    """
    _validate_term(term, rel_tol)
    qs, rs = zip(*[linalg.qr(u, mode='economic') for u in term.factors])
    core = multilinear_multiply(rs, term.core)
    hosvd = compact_hosvd(core, rel_tol=0)
    if hosvd.core.shape != term.ranks:
        raise ValueError("core lost rank during canonicalization (%s -> %s)" % (
            term.ranks, hosvd.core.shape))

    factors = []
    core = hosvd.core
    for d, (q, w) in enumerate(zip(qs, hosvd.factors)):
        u, signs = fix_signs(q @ w)
        core = mode_product(core, d, np.diag(signs))
        factors.append(u)
    return TuckerTerm(factors, core, term.structure)


def canonicalize(s, rel_tol=REL_TOL):
    return Sbtd([canonicalize_hosvd(term, rel_tol) for term in s], s.dims)


#### Comparisons #############################################################
def forward_error(a, b):
    """Permutation-minimized root-sum-square distance between the terms of
    two decompositions, `min_pi sqrt(sum_r ||A_r - B_pi(r)||^2)`, with the
    assignment solved exactly.
    """
    if len(a) != len(b):
        raise ValueError("decompositions must have the same number of terms "
                         "(got %s, %s)" % (len(a), len(b)))
    if a.dims != b.dims:
        raise ValueError("dims mismatch: %s vs %s" % (a.dims, b.dims))
    ta = [term.to_tensor() for term in a]
    tb = [term.to_tensor() for term in b]
    cost = np.array([[norm(x - y)**2 for y in tb] for x in ta])
    rows, cols = linear_sum_assignment(cost)
    return float(np.sqrt(cost[rows, cols].sum()))


#### Transformations #########################################################
def expand(s, qs):
    """Subspace-constrained expansion `A_r = (Q_1, ..., Q_D) . G_r`, i.e.
    factors `Q_d U_d^r`. `None` in `qs` leaves that mode unchanged.
    """
    if len(qs) != len(s.dims):
        raise ValueError("need one matrix per mode (got %s for order %s)" % (
            len(qs), len(s.dims)))
    terms = [term.replace(factors=[u if q is None else q @ u
                                   for q, u in zip(qs, term.factors)])
             for term in s]
    return Sbtd(terms)


def as_btd(s):
    """`s` regarded as a plain BTD: every term re-tagged `full`."""
    return Sbtd([TuckerTerm(t.factors, t.core, 'full') for t in s], s.dims)


def sbtd_to_params(s):
    """Flat parameter vector: per term, factors in mode order (C-order), then
    the core (C-order).
    """
    return np.concatenate([np.concatenate([u.ravel() for u in term.factors]
                                          + [term.core.ravel()])
                           for term in s])


def params_from_sbtd(x, template):
    """Inverse of `sbtd_to_params`, shapes and structures from `template`."""
    x = np.asarray(x, dtype=np.float64)
    terms, i = [], 0
    for term in template:
        factors = []
        for u in term.factors:
            factors.append(x[i:i + u.size].reshape(u.shape))
            i += u.size
        core = x[i:i + term.core.size].reshape(term.core.shape)
        i += term.core.size
        terms.append(TuckerTerm(factors, core, term.structure))
    if i != x.size:
        raise ValueError("`x` has %s entries, template needs %s" % (x.size, i))
    return Sbtd(terms, template.dims)
