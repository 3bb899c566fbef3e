import pytest
import numpy as np
from sbtdcond.sbtd import CoreStructure, TuckerTerm, Sbtd, core_tangent_basis
from sbtdcond.sbtd import evaluate_sum, validate, canonicalize_hosvd
from sbtdcond.sbtd import forward_error, expand, as_btd
from sbtdcond.sbtd import sbtd_to_params, params_from_sbtd
from sbtdcond.tensor import multilinear_multiply, norm, unfold
from sbtdcond.experiments import gen_random_sbtd, gen_illcond_btd
from sbtdcond.experiments import IllCondParams
from sbtdcond.utils import gram_deviation


#### Helper methods ##########################################################
def e(n, i):
    v = np.zeros((n, 1))
    v[i] = 1
    return v


def odeco_rank1_pair():
    return Sbtd([TuckerTerm([e(2, 0)] * 3, 1., 'rank1'),
                 TuckerTerm([e(2, 1)] * 3, 1., 'rank1')])


def skewed_term(seed=0):
    rng = np.random.default_rng(seed)
    factors = [rng.standard_normal((n, l)) @ np.diag([1., 1e3][:l])
               for n, l in zip((4, 4, 2), (2, 2, 1))]
    return TuckerTerm(factors, rng.standard_normal((2, 2, 1)))


#### Tests ###################################################################
def test_core_structures():
    basis = core_tangent_basis('full', np.ones((2, 2, 1)))
    assert len(basis) == 4
    gram = np.array([[np.sum(a * b) for b in basis] for a in basis])
    assert np.array_equal(gram, np.eye(4))

    basis = core_tangent_basis('rank1', np.full((1, 1, 1), -3.))
    assert len(basis) == 1 and basis[0].ravel()[0] == 1

    with pytest.raises(ValueError):
        CoreStructure('tensor-train')
    with pytest.raises(TypeError):
        CoreStructure(3)

    custom = CoreStructure(lambda c: [c / np.linalg.norm(c)])
    assert not custom.builtin
    assert len(custom(np.ones((2, 2)))) == 1


def test_term_construction():
    t = TuckerTerm([np.ones((3, 1))] * 3, 2.)
    assert t.core.shape == (1, 1, 1) and t.dims == (3, 3, 3)
    with pytest.raises(ValueError):
        t.core[0, 0, 0] = 1.  # read-only

    with pytest.raises(ValueError):
        TuckerTerm([np.ones((3, 2)), np.ones((3, 1))], np.ones((2, 2)))
    with pytest.raises(ValueError):
        Sbtd([t, TuckerTerm([np.ones((4, 1))] * 3, 1.)])
    with pytest.raises(ValueError):
        Sbtd([])


def test_evaluate_sum():
    core = np.random.default_rng(0).standard_normal((2, 3, 2))
    s = Sbtd([TuckerTerm([np.eye(2), np.eye(3), np.eye(2)], core)])
    assert np.array_equal(evaluate_sum(s), core)

    out = evaluate_sum(odeco_rank1_pair())
    assert np.sum(out != 0) == 2 and out[0, 0, 0] == 1 and out[1, 1, 1] == 1


def test_evaluate_sum_illcond_family():
    p = IllCondParams(N=100., seed=3)
    core, _ = gen_illcond_btd(p)
    # recover A, B, C from the terms and evaluate N (B + A/N) . C - N B . C
    b = [u for u in core[1].factors]
    c = -core[1].core / p.N
    a = [(u - bd) * p.N for u, bd in zip(core[0].factors, b)]
    direct = p.N * (multilinear_multiply([bd + ad / p.N for ad, bd in
                                          zip(a, b)], c)
                    - multilinear_multiply(b, c))
    got = evaluate_sum(core)
    assert norm(got - direct) <= 1e-10 * norm(direct), norm(got - direct)


def test_validate():
    s = gen_random_sbtd((4, 4, 2), 'full', [(2, 2, 1)] * 2, seed=0)
    report = validate(s)
    assert report.ok, report.failures
    assert report.factor_ranks == [(2, 2, 1)] * 2

    u = np.random.default_rng(1).standard_normal((4, 1))
    dup = TuckerTerm([np.hstack([u, u]), np.eye(4)[:, :2], np.eye(2)[:, :1]],
                     np.random.default_rng(2).standard_normal((2, 2, 1)))
    report = validate(Sbtd([dup]))
    assert not report.ok
    assert any('factors[0]' in f for f in report.failures), report.failures

    core = np.random.default_rng(3).standard_normal((2, 2, 2))
    core[1] = 0
    bad = TuckerTerm([np.eye(3)[:, :2]] * 3, core)
    report = validate(Sbtd([bad]))
    assert any('core' in f for f in report.failures), report.failures


def test_canonicalize_rank1():
    term = TuckerTerm([np.array([[3.], [4.]]), np.array([[0.], [-2.]]),
                       np.array([[1.], [1.]])], 1., 'rank1')
    out = canonicalize_hosvd(term)
    for u in out.factors:
        assert abs(np.linalg.norm(u) - 1) < 1e-14
    assert abs(abs(out.core.ravel()[0]) - norm(term.to_tensor())) < 1e-12
    assert out.structure == term.structure


def test_canonicalize_skewed():
    errs = []
    for seed in range(5):
        term = skewed_term(seed)
        out = canonicalize_hosvd(term)
        t = term.to_tensor()
        errs.append(norm(out.to_tensor() - t) / norm(t))
        assert errs[-1] < 1e-12, (errs[-1], seed)
        for u in out.factors:
            assert gram_deviation(u) < 1e-12
        for d in range(3):
            cd = unfold(out.core, d)
            gram = cd @ cd.T
            assert np.max(np.abs(gram - np.diag(np.diag(gram)))) < (
                1e-12 * norm(t)**2)
    print("\ncanonicalize PASSED\nerrs:", ', '.join('%.1e' % e for e in errs))


def test_canonicalize_idempotent():
    for seed in range(10):
        once = canonicalize_hosvd(skewed_term(seed))
        twice = canonicalize_hosvd(once)
        for u, v in zip(once.factors, twice.factors):
            assert np.max(np.abs(u - v)) < 1e-12, seed
        # cores of skewed terms reach norms ~1e7
        rel = norm(once.core - twice.core) / norm(once.core)
        assert rel < 1e-12, (rel, seed)


def test_forward_error():
    s = gen_random_sbtd((5, 4, 3), 'full', [(2, 2, 1), (1, 2, 2)], seed=4)
    assert forward_error(s, s) == 0
    assert forward_error(s, Sbtd(s.terms[::-1])) == 0

    delta = 1e-3 * np.random.default_rng(5).standard_normal((2, 2, 1))
    shifted = Sbtd([s[0].replace(core=s[0].core + delta), s[1]])
    expected = norm(multilinear_multiply(s[0].factors, delta))
    assert abs(forward_error(s, shifted) - expected) < 1e-12


def test_forward_error_metric():
    draws = [gen_random_sbtd((5, 4, 3), ['full', 'rank1'], [(2, 2, 1), None],
                             seed=seed) for seed in range(10, 16)]
    for a in draws:
        for b in draws:
            ab, ba = forward_error(a, b), forward_error(b, a)
            assert abs(ab - ba) <= 1e-12 * max(ab, 1), (ab, ba)
            for c in draws[:3]:
                assert ab <= forward_error(a, c) + forward_error(c, b) + 1e-12


def test_supported_structures():
    import sbtdcond
    assert sbtdcond.structures() == ('full', 'rank1')
    for name in sbtdcond.structures():
        assert CoreStructure(name).builtin


def test_gl_invariance():
    s = gen_random_sbtd((5, 4, 3), 'full', [(2, 2, 2), (2, 1, 2)], seed=6)
    rng = np.random.default_rng(7)
    terms = []
    for term in s:
        gs = [rng.standard_normal((l, l)) + 2 * np.eye(l) for l in term.ranks]
        core = multilinear_multiply([np.linalg.inv(g) for g in gs], term.core)
        terms.append(TuckerTerm([u @ g for u, g in zip(term.factors, gs)],
                                core))
    a, b = evaluate_sum(s), evaluate_sum(Sbtd(terms))
    assert norm(a - b) <= 1e-10 * norm(a)


def test_expand_and_params():
    s = gen_random_sbtd((4, 3, 2), ['full', 'rank1'], [(2, 2, 1), None],
                        seed=8)
    rng = np.random.default_rng(9)
    qs = [np.linalg.qr(rng.standard_normal((n, m)))[0]
          for n, m in zip((9, 7, 5), s.dims)]
    big = expand(s, qs)
    assert big.dims == (9, 7, 5)
    assert np.allclose(evaluate_sum(big),
                       multilinear_multiply(qs, evaluate_sum(s)), atol=1e-13)
    assert expand(s, [None] * 3).dims == s.dims

    assert [t.structure.name for t in as_btd(s)] == ['full', 'full']

    x = sbtd_to_params(s)
    assert x.size == sum(sum(u.size for u in t.factors) + t.core.size
                         for t in s)
    back = params_from_sbtd(x, s)
    assert np.array_equal(sbtd_to_params(back), x)
    with pytest.raises(ValueError):
        params_from_sbtd(x[:-1], s)


if __name__ == '__main__':
    pytest.main([__file__, "-s"])
