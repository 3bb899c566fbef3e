# -*- coding: utf-8 -*-
"""Synthetic instances, a damped Gauss-Newton BTD fitter and the harnesses
that check conditioning results numerically. Harnesses return plain dicts
(JSON-ready records) for the command line.
"""
import numpy as np
from collections import namedtuple
from scipy import linalg
from .condition import assemble_terracini, compress_sbtd, condition_direct
from .condition import condition_compressed, cost_model
from .sbtd import Sbtd, TuckerTerm, evaluate_sum, validate, expand
from .sbtd import forward_error, sbtd_to_params, params_from_sbtd
from .tensor import unfold, kron, multilinear_multiply, norm
from .tucker import minimal_compress, multilinear_rank
from .utils import REL_TOL, ABS_TOL_FACTOR, RESIDUAL_FILTER, EPS, WARN, NOTE
from .utils import IllPosedError, _process_tensor, _process_dims
from .utils import random_orthonormal, relative_difference


#### Instance generators #####################################################
IllCondParams = namedtuple('IllCondParams', ['N', 'core_dims', 'a_shapes',
                                             'inflated_dims', 'seed'])
IllCondParams.__new__.__defaults__ = (1., (2, 2, 1), ((4, 2), (4, 2), (2, 1)),
                                      (60, 40, 40), 0)
IllCondParams.__doc__ = """Parameters of the ill-conditioned two-term BTD family

    G_N = (N (B_1 + A_1/N) x .. x (B_D + A_D/N) - N B_1 x .. x B_D) . C

    N: float >= 1. Divergence parameter; kappa grows with N.
    core_dims: tuple[int]. Dims of C, i.e. the multilinear rank of each term.
    a_shapes: tuple[(int, int)]. Shapes of A_d (and B_d); rows give G_N's dims.
    inflated_dims: tuple[int]. Dims of the inflated A_N = (Q_1, .., Q_D) . G_N.
    seed: int.
"""


def _full_column_rank(u, rel_tol=REL_TOL):
    s = linalg.svd(u, compute_uv=False)
    return s[-1] > rel_tol * s[0]


def gen_illcond_btd(p=IllCondParams(), max_retries=10):
    """Draws one member of the ill-conditioned family and its inflation.

    `C` and `A_d` are standard normal, `B_d` the Q-factor of a standard normal
    draw, `Q_d` random with orthonormal columns. Draws where `B_d + A_d/N` or
    the core lose rank are redrawn.

    # Returns:
        core: Sbtd
            Two `full` terms in `a_shapes` rows: factors `B_d + A_d/N` with
            core `N C`, and factors `B_d` with core `-N C`.
        inflated: Sbtd
            `expand(core, [Q_1, ..., Q_D])`, dims `inflated_dims`.
    """
    if p.N < 1:
        raise ValueError("`N` must be >= 1 (got %s)" % p.N)
    core_dims = _process_dims(p.core_dims, 'core_dims')
    if len(p.a_shapes) != len(core_dims) or len(p.inflated_dims) != len(
            core_dims):
        raise ValueError("`a_shapes` and `inflated_dims` need one entry per "
                         "core mode (got %s, %s for order %s)" % (
                             p.a_shapes, p.inflated_dims, len(core_dims)))
    for d, ((n, l), m) in enumerate(zip(p.a_shapes, p.inflated_dims)):
        if l != core_dims[d] or not (l <= n <= m):
            raise ValueError("mode %s: need core_dims[d] == a_shapes[d][1] <= "
                             "a_shapes[d][0] <= inflated_dims[d] (got %s, %s, "
                             "%s)" % (d, core_dims[d], (n, l), m))

    rng = np.random.default_rng(p.seed)
    for attempt in range(max_retries):
        c = rng.standard_normal(core_dims)
        a = [rng.standard_normal(shape) for shape in p.a_shapes]
        b = [random_orthonormal(rng, *shape) for shape in p.a_shapes]
        shifted = [bd + ad / p.N for ad, bd in zip(a, b)]
        if (all(_full_column_rank(u) for u in shifted)
                and multilinear_rank(c) == core_dims):
            break
        WARN("degenerate draw for seed %s, redrawing (attempt %s)" % (
            p.seed, attempt + 1))
    else:
        raise ValueError("no full-rank draw after %s retries (seed %s)" % (
            max_retries, p.seed))

    core = Sbtd([TuckerTerm(shifted, p.N * c), TuckerTerm(b, -p.N * c)])
    qs = [random_orthonormal(rng, m, shape[0])
          for m, shape in zip(p.inflated_dims, p.a_shapes)]
    return core, expand(core, qs)


def gen_illcond_cpd(N, dims=(4, 4, 4), seed=0):
    """Two rank-1 terms `N (x_1 + y_1/N) x .. - N x_1 x ..`, whose sum tends to
    a rank-3 tensor as `N -> inf` while the terms diverge.
    """
    if N < 1:
        raise ValueError("`N` must be >= 1 (got %s)" % N)
    dims = _process_dims(dims)
    rng = np.random.default_rng(seed)
    x = [rng.standard_normal((n, 1)) for n in dims]
    y = [rng.standard_normal((n, 1)) for n in dims]
    return Sbtd([TuckerTerm([xd + yd / N for xd, yd in zip(x, y)], N, 'rank1'),
                 TuckerTerm(x, -N, 'rank1')])


def _process_structures(structures, ranks, n_terms=None):
    if ranks is None:
        if n_terms is None:
            raise ValueError("`ranks` is required")
        ranks = [None] * n_terms
    if isinstance(structures, str) or callable(structures):
        structures = [structures] * len(ranks)
    structures = list(structures)
    if len(structures) != len(ranks):
        raise ValueError("need one structure per term (got %s structures, %s "
                         "ranks)" % (len(structures), len(ranks)))
    return structures, list(ranks)


def _check_ranks(dims, ranks, structures):
    out = []
    for r, (l, structure) in enumerate(zip(ranks, structures)):
        if l is None:
            l = (1,) * len(dims)
        l = _process_dims(l, 'ranks[%s]' % r)
        if len(l) != len(dims):
            raise ValueError("ranks[%s] has order %s, dims have order %s" % (
                r, len(l), len(dims)))
        if structure == 'rank1' and any(ld != 1 for ld in l):
            raise ValueError("ranks[%s]: rank1 terms need all ranks 1 (got %s)"
                             % (r, l))
        for d, (ld, n) in enumerate(zip(l, dims)):
            if ld > n:
                raise ValueError("ranks[%s][%s] = %s exceeds dims[%s] = %s" % (
                    r, d, ld, d, n))
            if ld > np.prod([l[k] for k in range(len(l)) if k != d]):
                raise ValueError("ranks[%s] = %s is not a realizable "
                                 "multilinear rank" % (r, l))
        out.append(l)
    return out


def _random_core(rng, l, structure):
    if structure == 'rank1':
        c = rng.standard_normal()
        return np.full(l, c if c != 0 else 1.)
    return rng.standard_normal(l)


def gen_random_sbtd(dims, structures='full', ranks=None, seed=0,
                    max_retries=10):
    """Random SBTD with independent orthonormal factors per term and standard
    normal cores, redrawn until `validate` passes.

    # Arguments:
        dims: tuple[int]
            Ambient dimensions.
        structures: str / list[str]
            One structure for all terms or one per term.
        ranks: list[tuple[int]]
            Multilinear rank per term; `None` entries mean all ones.
        seed: int

    # Example:
        gen_random_sbtd((4, 4, 2), 'full', [(2, 2, 1), (2, 2, 1)], seed=0)
    """
    dims = _process_dims(dims)
    structures, ranks = _process_structures(structures, ranks)
    ranks = _check_ranks(dims, ranks, structures)

    rng = np.random.default_rng(seed)
    for attempt in range(max_retries):
        terms = [TuckerTerm([random_orthonormal(rng, n, ld)
                             for n, ld in zip(dims, l)],
                            _random_core(rng, l, structure), structure)
                 for l, structure in zip(ranks, structures)]
        s = Sbtd(terms, dims)
        if validate(s).ok:
            return s
        WARN("invalid draw for seed %s, redrawing (attempt %s)" % (
            seed, attempt + 1))
    raise ValueError("no valid draw after %s retries (seed %s)" % (
        max_retries, seed))


def gen_odeco_sbtd(dims, ranks, seed=0, structures='full'):
    """SBTD whose terms have pairwise orthogonal factor subspaces in every
    mode (condition number 1). Needs `sum_r l_d^r <= n_d`.
    """
    dims = _process_dims(dims)
    structures, ranks = _process_structures(structures, ranks)
    ranks = _check_ranks(dims, ranks, structures)
    for d, n in enumerate(dims):
        total = sum(l[d] for l in ranks)
        if total > n:
            raise ValueError("mode %s: sum of ranks %s exceeds dims[%s] = %s"
                             % (d, total, d, n))

    rng = np.random.default_rng(seed)
    bases = [random_orthonormal(rng, n, sum(l[d] for l in ranks))
             for d, n in enumerate(dims)]
    offsets = [0] * len(dims)
    terms = []
    for l, structure in zip(ranks, structures):
        factors = []
        for d, ld in enumerate(l):
            factors.append(bases[d][:, offsets[d]:offsets[d] + ld])
            offsets[d] += ld
        terms.append(TuckerTerm(factors, _random_core(rng, l, structure),
                                structure))
    return Sbtd(terms, dims)


def gen_illposed_sbtd(kind, dims=(6, 5, 4), ranks=(2, 2, 2), seed=0,
                      structure='full'):
    """Two-term SBTD with infinite condition number.

    # Arguments:
        kind: str['shared-subspace', 'orthogonal-mode']
            'shared-subspace': both terms have the same factor subspaces in
                every mode (different bases and cores), so their Kronecker
                blocks share a kernel.
            'orthogonal-mode': factors coincide in modes 1..D-1; in mode 0
                the two factors have orthogonal column spaces. The
                `btd_lower_bound` is then exactly 1.
        dims, ranks: tuple[int]
            Ambient dims; multilinear rank of both terms.
    """
    dims = _process_dims(dims)
    l = _check_ranks(dims, [ranks], [structure])[0]
    rng = np.random.default_rng(seed)

    if kind == 'shared-subspace':
        u = [random_orthonormal(rng, n, ld) for n, ld in zip(dims, l)]
        v = [ud @ random_orthonormal(rng, ld, ld) for ud, ld in zip(u, l)]
    elif kind == 'orthogonal-mode':
        if 2 * l[0] > dims[0]:
            raise ValueError("'orthogonal-mode' needs 2 * ranks[0] <= dims[0] "
                             "(got %s, %s)" % (l[0], dims[0]))
        u = [random_orthonormal(rng, n, ld) for n, ld in zip(dims, l)]
        q = random_orthonormal(rng, dims[0], 2 * l[0])
        u[0], v = q[:, :l[0]], [q[:, l[0]:]] + u[1:]
    else:
        raise ValueError("`kind` must be one of: shared-subspace, "
                         "orthogonal-mode (got %s)" % kind)
    return Sbtd([TuckerTerm(u, _random_core(rng, l, structure), structure),
                 TuckerTerm(v, _random_core(rng, l, structure), structure)])


def perturb_sbtd(s, noise, seed=0):
    """Entrywise relative perturbation of all parameters,
    `x -> x (1 + noise g)` with `g` standard normal.
    """
    rng = np.random.default_rng(seed)
    x = sbtd_to_params(s)
    return params_from_sbtd(x * (1 + noise * rng.standard_normal(x.size)), s)


#### Probing #################################################################
ProbeResult = namedtuple('ProbeResult', ['samples', 'max_ratio', 'mean_ratio',
                                         'kappa_ref', 'singular_ratio',
                                         'top_ratio'])
ProbeResult.__doc__ = """Monte-Carlo check of the condition number.

    samples: int. Number of random directions.
    max_ratio, mean_ratio: float. Over samples, `||x|| / ||delta||` where `x`
        are the least-squares coefficients of `delta` in the Terracini basis.
    kappa_ref: float. `1 / sigma_min` from the same SVD.
    singular_ratio: float. Ratio for `delta` = left singular vector of
        sigma_min; equals `kappa_ref`.
    top_ratio: float. Ratio for the first left singular vector, `1 / sigma_1`.
"""


def perturbation_probe(s, samples=1000, seed=0, inject_singular=False,
                       rel_tol=REL_TOL):
    """Draws `samples` directions in the column span of the Terracini matrix
    and records how much the least-squares coefficients amplify them.

    Works on the compressed decomposition, whose Terracini matrix has the same
    singular values. With `inject_singular`, the first sample is replaced by
    the sigma_min left singular vector, so `max_ratio == kappa_ref`.
    """
    samples = int(samples)
    if samples < 0:
        raise ValueError("`samples` must be >= 0 (got %s)" % samples)
    compressed, _ = compress_sbtd(s)
    t = assemble_terracini(compressed, rel_tol).matrix
    u, sv, _ = linalg.svd(t, full_matrices=False)
    if t.shape[1] > t.shape[0] or sv[-1] < ABS_TOL_FACTOR * sv[0]:
        raise IllPosedError("decomposition is ill-posed (sigma_min = %.3e)" % (
            0. if t.shape[1] > t.shape[0] else sv[-1]))

    g = np.random.default_rng(seed).standard_normal((sv.size, samples))
    deltas = np.hstack([u @ g, u[:, -1:], u[:, :1]])
    if inject_singular and samples:
        deltas[:, 0] = u[:, -1]
    x = linalg.lstsq(t, deltas)[0]
    ratios = np.linalg.norm(x, axis=0) / np.linalg.norm(deltas, axis=0)
    sampled = ratios[:samples]
    return ProbeResult(samples=samples,
                       max_ratio=float(sampled.max()) if samples else 0.,
                       mean_ratio=float(sampled.mean()) if samples else 0.,
                       kappa_ref=float(1 / sv[-1]),
                       singular_ratio=float(ratios[samples]),
                       top_ratio=float(ratios[samples + 1]))


#### Fitting #################################################################
def _factor_jacobian(term, d):
    """d vec(term) / d vec(U_d): column `(i, j)` is `e_i` placed along mode
    `d` times slice `j` of the core multiplied by all other factors.
    """
    n, l = term.factors[d].shape
    others = [None if k == d else u for k, u in enumerate(term.factors)]
    y = unfold(multilinear_multiply(others, term.core), d)
    rest = term.dims[:d] + term.dims[d + 1:]
    block = np.einsum('ai,jb->abij', np.eye(n), y).reshape((n,) + rest + (n*l,))
    return np.moveaxis(block, 0, d).reshape(-1, n * l)


def model_jacobian(s):
    """Jacobian of `vec(evaluate_sum(s))` with respect to `sbtd_to_params(s)`,
    shape `prod(dims) x n_params`.
    """
    blocks = []
    for term in s:
        blocks.extend(_factor_jacobian(term, d) for d in range(term.order))
        blocks.append(kron(*term.factors))
    return np.hstack(blocks)


def linearized_update(s, delta):
    """Parameters moved by the minimum-norm solution of
    `model_jacobian(s) dx = vec(delta)`; to first order the sum moves by the
    projection of `delta` onto the tangent space.
    """
    delta = _process_tensor(delta, 'delta')
    if delta.shape != s.dims:
        raise ValueError("`delta` must have shape %s (got %s)" % (
            s.dims, delta.shape))
    dx = linalg.lstsq(model_jacobian(s), delta.ravel())[0]
    return params_from_sbtd(sbtd_to_params(s) + dx, s)


FitResult = namedtuple('FitResult', ['sbtd', 'iterations', 'residual_history'])
FitResult.__doc__ = """Output of `fit_btd`.

    sbtd: Sbtd. Fitted decomposition.
    iterations: int. Jacobian evaluations (Gauss-Newton steps).
    residual_history: list[float]. `||target - sum||`, initial then one entry
        per accepted step; nonincreasing.
"""


def fit_btd(target, init, max_iter=200, res_tol=1e-12, damping=1e-4,
            max_damping_steps=30):
    """Fits an SBTD with the shapes and structures of `init` to `target` by
    damped Gauss-Newton (Levenberg-Marquardt) on the factors and cores.

    # Arguments:
        target: np.ndarray
            Tensor to decompose; `target.shape == init.dims`.
        init: Sbtd
            Starting point.
        max_iter: int
            Maximum number of Gauss-Newton steps.
        res_tol: float
            Stops once `||target - sum|| <= res_tol * ||target||`.
        damping: float
            Initial damping relative to `trace(J^T J) / n_params`; multiplied
            by 10 after a rejected step and divided by 10 after an accepted one.
        max_damping_steps: int
            Consecutive rejections before giving up (stagnation).

    # Returns:
        FitResult

    # Raises:
        FloatingPointError: residual became non-finite.
    """
    target = _process_tensor(target, 'target')
    if init.dims != target.shape:
        raise ValueError("`init` dims %s don't match `target` shape %s" % (
            init.dims, target.shape))
    threshold = res_tol * norm(target)
    flat = target.ravel()

    def residual(x):
        r = flat - evaluate_sum(params_from_sbtd(x, init)).ravel()
        f = float(np.linalg.norm(r))
        if not np.isfinite(f):
            raise FloatingPointError("residual is not finite; fit diverged")
        return r, f

    x = sbtd_to_params(init)
    r, f = residual(x)
    history, lam, lam_floor = [f], None, None
    iterations = 0
    while f > threshold and iterations < max_iter:
        iterations += 1
        jac = model_jacobian(params_from_sbtd(x, init))
        n_params = jac.shape[1]
        if lam is None:
            lam = damping * np.sum(jac**2) / n_params
            lam_floor = EPS * lam
        rhs = np.concatenate([r, np.zeros(n_params)])

        for _ in range(max_damping_steps):
            augmented = np.vstack([jac, np.sqrt(lam) * np.eye(n_params)])
            dx = linalg.lstsq(augmented, rhs)[0]
            r_new, f_new = residual(x + dx)
            if f_new < f:
                x, r, f = x + dx, r_new, f_new
                history.append(f)
                lam = max(lam / 10, lam_floor)
                break
            lam *= 10
        else:
            WARN("fit stagnated at residual %.3e after %s iterations" % (
                f, iterations))
            break
    return FitResult(params_from_sbtd(x, init), iterations, history)


def compress_decompose_expand(target, init, rel_tol=REL_TOL, **fit_kw):
    """Fits `init` to `target` in the minimal Tucker subspace of `target`:
    compress with `minimal_compress`, project `init`'s factors onto the
    subspaces, fit the core, expand back.

    # Returns:
        expanded: Sbtd
            Subspace-constrained decomposition of `target`.
        fit: FitResult
            Fit of the core tensor.
        qs: tuple[np.ndarray]
            Orthonormal mode bases.
    """
    target = _process_tensor(target, 'target', allow_zero=False)
    tucker = minimal_compress(target, rel_tol)
    qs = tucker.factors
    projected = Sbtd([term.replace(factors=[q.T @ u for q, u in
                                            zip(qs, term.factors)])
                      for term in init])
    NOTE("fitting in compressed space %s -> %s" % (target.shape,
                                                   tucker.core.shape))
    fit = fit_btd(tucker.core, projected, **fit_kw)
    return expand(fit.sbtd, qs), fit, qs


def error_bound_check(truth, fitted, target, kappa=None,
                      residual_filter=RESIDUAL_FILTER):
    """Ratio `forward_error(truth, fitted) / (kappa * residual)` of the true
    forward error to its first-order estimate, with
    `residual = ||target - evaluate_sum(fitted)||` and `kappa` the condition
    number of `truth` (computed if not given). Exact fits give 0.

    # Raises:
        ValueError: residual above `residual_filter`, where the first-order
            estimate isn't meaningful.
        IllPosedError: `truth` has infinite condition number.
    """
    target = _process_tensor(target, 'target')
    residual = norm(target - evaluate_sum(fitted))
    if residual > residual_filter:
        raise ValueError("residual %.3e exceeds filter %.1e" % (
            residual, residual_filter))
    if kappa is None:
        kappa = condition_compressed(truth).kappa
    if not np.isfinite(kappa):
        raise IllPosedError("`truth` is ill-posed; no error bound")
    error = forward_error(truth, fitted)
    if error == 0:
        return 0.
    return np.inf if residual == 0 else float(error / (kappa * residual))


#### Harnesses ###############################################################
def _invariance_instance(rng):
    kind = ('cpd', 'btd-221', 'btd-222', 'mixed')[rng.integers(4)]
    if kind == 'cpd':
        n_terms = int(rng.integers(2, 5))
        core_dims = tuple(int(m) for m in rng.integers(n_terms, 7, size=3))
        return kind, core_dims, 'rank1', [None] * n_terms
    elif kind == 'btd-221':
        core_dims = (int(rng.integers(4, 7)), int(rng.integers(4, 7)),
                     int(rng.integers(2, 7)))
        return kind, core_dims, 'full', [(2, 2, 1)] * 2
    elif kind == 'btd-222':
        core_dims = tuple(int(m) for m in rng.integers(4, 7, size=3))
        return kind, core_dims, 'full', [(2, 2, 2)] * 2
    core_dims = (int(rng.integers(3, 7)), int(rng.integers(3, 7)),
                 int(rng.integers(2, 7)))
    return kind, core_dims, ['full', 'rank1'], [(2, 2, 1), None]


def verify_invariance(trials=200, seed=0, max_kappa=1e12, rtol=1e-8,
                      rtol_relaxed=1e-4, max_size=8000, family='mixed',
                      params=IllCondParams()):
    """Checks, on seeded random instances, that the condition number is
    unchanged by orthogonal Tucker inflation and that the direct and
    compressed algorithms agree.

    # Arguments:
        trials: int
            Number of instances; trial `k` uses seed `seed + k`.
        max_kappa: float
            Instances with larger (or infinite) core kappa are skipped.
        rtol, rtol_relaxed: float
            Relative tolerance for kappa <= 1e8, and for 1e8 < kappa.
        max_size: int
            Cap on the inflated tensor's size ('mixed' family).
        family: str['mixed', 'illcond']
            'mixed': CPDs, (2,2,1)- and (2,2,2)-BTDs and mixed rank1/full
            terms with core dims <= 6, inflated to random dims.
            'illcond': the ill-conditioned two-term family with
            `N = 10^U(1, 4)`, inflated to `params.inflated_dims`.

    # Returns:
        dict: `trials, passed, failed, skipped, failed_seeds, records`.
    """
    if family not in ('mixed', 'illcond'):
        raise ValueError("`family` must be one of: mixed, illcond (got %s)"
                         % family)
    records, failed_seeds = [], []
    passed = skipped = 0
    for k in range(int(trials)):
        trial_seed = seed + k
        rng = np.random.default_rng(trial_seed)
        if family == 'mixed':
            kind, core_dims, structures, ranks = _invariance_instance(rng)
            core = gen_random_sbtd(core_dims, structures, ranks, trial_seed)
            cap = int(max_size ** (1 / len(core_dims)))
            dims = [int(rng.integers(m, max(m, cap) + 1)) for m in core_dims]
            inflated = expand(core, [random_orthonormal(rng, n, m)
                                     for n, m in zip(dims, core_dims)])
        else:
            kind = 'illcond'
            N = float(10**rng.uniform(1, 4))
            core, inflated = gen_illcond_btd(params._replace(N=N,
                                                             seed=trial_seed))

        k_core = condition_direct(core).kappa
        record = dict(trial=k, seed=trial_seed, kind=kind,
                      core_dims=list(core.dims), dims=list(inflated.dims),
                      kappa_core=k_core)
        if not k_core <= max_kappa:
            skipped += 1
            records.append(dict(record, skipped=True, passed=None))
            continue

        k_direct = condition_direct(inflated).kappa
        k_compressed = condition_compressed(inflated).kappa
        tol = rtol if k_core <= 1e8 else rtol_relaxed
        rel_invariance = relative_difference(k_core, k_direct)
        rel_algorithm = relative_difference(k_direct, k_compressed)
        ok = bool(rel_invariance <= tol and rel_algorithm <= tol)
        passed += ok
        if not ok:
            failed_seeds.append(trial_seed)
        records.append(dict(record, kappa_inflated=k_direct,
                            kappa_compressed=k_compressed,
                            rel_invariance=rel_invariance,
                            rel_algorithm=rel_algorithm, tol=tol,
                            skipped=False, passed=ok))
    return dict(trials=int(trials), passed=passed, failed=len(failed_seeds),
                skipped=skipped, failed_seeds=failed_seeds, records=records)


def illcond_trend(Ns=(10, 100, 1000, 10000), seeds=range(50),
                  params=IllCondParams(), inflated=False):
    """Median condition number of the ill-conditioned family per `N`.

    With `inflated`, also computes kappa of the inflated decomposition (by
    compression) and records its relative difference to the core kappa.

    # Returns:
        dict: `records` (one per N, seed), `medians` (one per N) and
        `increasing` (medians strictly increasing in N).
    """
    records, medians = [], []
    for N in Ns:
        kappas = []
        for seed in seeds:
            core, infl = gen_illcond_btd(params._replace(N=N, seed=seed))
            kappa = condition_direct(core).kappa
            rec = dict(N=N, seed=seed, kappa=kappa)
            if inflated:
                k_infl = condition_compressed(infl).kappa
                rec.update(kappa_inflated=k_infl,
                           rel_difference=relative_difference(kappa, k_infl))
            records.append(rec)
            kappas.append(kappa)
        medians.append(dict(N=N, median_kappa=float(np.median(kappas))))
    values = [m['median_kappa'] for m in medians]
    increasing = bool(all(a < b for a, b in zip(values[:-1], values[1:])))
    return dict(records=records, medians=medians, increasing=increasing)


def fit_experiment(N, seed, params=IllCondParams(), noise=1e-3, max_iter=500,
                   res_tol=1e-10, inflated=False):
    """Fits one member of the ill-conditioned family from a perturbed truth
    and compares the forward error with its first-order estimate.

    With `inflated`, the inflated tensor is fitted by
    `compress_decompose_expand` and errors are measured in the inflated space.

    # Returns:
        dict: `N, seed, inflated, kappa, iterations, residual, forward_error,
        bound_ratio` (`None` when the residual is above the filter).
    """
    core, infl = gen_illcond_btd(params._replace(N=N, seed=seed))
    truth = infl if inflated else core
    target = evaluate_sum(truth)
    init = perturb_sbtd(truth, noise, seed)
    if inflated:
        fitted, fit, _ = compress_decompose_expand(
            target, init, max_iter=max_iter, res_tol=res_tol)
    else:
        fit = fit_btd(target, init, max_iter=max_iter, res_tol=res_tol)
        fitted = fit.sbtd

    kappa = condition_compressed(truth).kappa
    residual = norm(target - evaluate_sum(fitted))
    ratio = None
    if residual <= RESIDUAL_FILTER and np.isfinite(kappa):
        ratio = error_bound_check(truth, fitted, target, kappa)
    return dict(N=N, seed=seed, inflated=inflated, kappa=kappa,
                iterations=fit.iterations, residual=residual,
                forward_error=forward_error(truth, fitted), bound_ratio=ratio)


def bench_condition(dims, ranks, structures=None, repeat=3, seed=0,
                    direct=True):
    """Wall times of `condition_direct` and `condition_compressed` on a random
    SBTD (median of `repeat` runs), measured speedup, and the speedup
    predicted by `cost_model` for uniform `n = geomean(dims)`, `l = max rank`.

    `direct=False` skips the direct method (its Terracini matrix has
    `prod(dims)` rows); direct fields are then `None`.
    """
    if structures is None:
        structures = ['rank1' if all(ld == 1 for ld in l) else 'full'
                      for l in ranks]
    s = gen_random_sbtd(dims, structures, ranks, seed)
    repeat = max(int(repeat), 1)

    compressed = [condition_compressed(s) for _ in range(repeat)]
    t_compressed = float(np.median([rep.wall_time for rep in compressed]))
    t_direct = kappa_direct = speedup = None
    if direct:
        reports = [condition_direct(s) for _ in range(repeat)]
        t_direct = float(np.median([rep.wall_time for rep in reports]))
        kappa_direct = reports[0].kappa
        speedup = t_direct / t_compressed

    n = int(round(np.prod(s.dims) ** (1 / len(s.dims))))
    l = max(max(term.ranks) for term in s)
    direct_ops, compressed_ops = cost_model(n, len(s.dims), len(s), l)
    return dict(dims=list(s.dims), ranks=[list(term.ranks) for term in s],
                repeat=repeat, kappa_compressed=compressed[0].kappa,
                kappa_direct=kappa_direct, time_direct=t_direct,
                time_compressed=t_compressed, speedup=speedup,
                predicted_speedup=direct_ops / compressed_ops,
                compressed_dims=list(compressed[0].compressed_dims))
