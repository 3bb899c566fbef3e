import os
import pytest
import numpy as np
from sbtdcond.tensor import unfold, fold, kron, mode_product
from sbtdcond.tensor import multilinear_multiply, inner, norm
from sbtdcond.serialization import read_dt, write_dt


#### Helper methods ##########################################################
def _rand(*shape, seed=0):
    return np.random.default_rng(seed).standard_normal(shape)


#### Tests ###################################################################
def test_unfold_layout():
    t = np.arange(24, dtype=np.float64).reshape(2, 3, 4)
    m0 = unfold(t, 0)
    assert m0.shape == (2, 12)
    assert np.array_equal(m0[1], np.arange(12, 24))

    m1 = unfold(t, 1)
    assert m1.shape == (3, 8)
    # remaining modes (0, 2) in ascending order, mode 2 fastest
    assert np.array_equal(m1[0], [0, 1, 2, 3, 12, 13, 14, 15])

    m2 = unfold(t, 2)
    assert np.array_equal(m2[:, 0], [0, 1, 2, 3])
    assert np.array_equal(m2[0], [0, 4, 8, 12, 16, 20])


def test_unfold_hand_example():
    t = np.arange(1, 9, dtype=np.float64).reshape(2, 2, 2)
    assert np.array_equal(unfold(t, 0), [[1, 2, 3, 4], [5, 6, 7, 8]])
    assert np.array_equal(fold(np.arange(5.)[None], 0, (1, 5)),
                          np.arange(5.)[None])


def test_kron_hand_examples():
    assert np.array_equal(kron(np.eye(2), np.eye(2)), np.eye(4))
    assert np.array_equal(kron([[1, 2]], [[3], [4]]), [[3, 6], [4, 8]])

    a, b = _rand(3, 2, seed=5), _rand(2, 2, seed=6)
    sa, sb = np.linalg.svd(a)[1], np.linalg.svd(b)[1]
    expected = np.sort(np.outer(sa, sb).ravel())[::-1]
    assert np.allclose(np.linalg.svd(kron(a, b))[1], expected, atol=1e-12)


def test_kron_mixed_product():
    a, b = _rand(3, 2, seed=1), _rand(4, 3, seed=2)
    c, d = _rand(2, 5, seed=3), _rand(3, 2, seed=4)
    assert np.allclose(kron(a, b) @ kron(c, d), kron(a @ c, b @ d),
                       atol=1e-12)
    # n-ary: left fold
    assert np.allclose(kron(a, b, c), kron(kron(a, b), c), atol=1e-14)


def test_multilinear_loop_oracle():
    from sbtdcond.algos import multilinear_3
    us = [_rand(5, 3, seed=k) for k in range(3)]
    c = _rand(3, 3, 3, seed=9)
    assert np.allclose(multilinear_multiply(us, c), multilinear_3(*us, c),
                       atol=1e-12)

    vs = [_rand(n, seed=k) for k, n in enumerate((2, 3, 4))]
    ms = [_rand(3, n, seed=10 + k) for k, n in enumerate((2, 3, 4))]
    rank1 = np.einsum('i,j,k->ijk', *vs)
    expected = np.einsum('i,j,k->ijk', *[m @ v for m, v in zip(ms, vs)])
    assert np.allclose(multilinear_multiply(ms, rank1), expected, atol=1e-14)


def test_mode_product_hand_example():
    out = mode_product(np.ones((2, 2, 2)), 0, np.array([[1., 1], [0, 1]]))
    assert np.array_equal(out[0], 2 * np.ones((2, 2)))
    assert np.array_equal(out[1], np.ones((2, 2)))


def test_norm_orthogonal_invariance():
    rng = np.random.default_rng(0)
    c = rng.standard_normal((3, 2, 2))
    qs = [np.linalg.qr(rng.standard_normal((n, l)))[0]
          for n, l in zip((7, 5, 4), c.shape)]
    assert abs(norm(multilinear_multiply(qs, c)) - norm(c)) < 1e-12 * norm(c)
    assert norm(np.zeros((2, 2))) == 0
    e = np.zeros((2, 2, 2))
    e[0, 0, 0] = 1
    assert norm(e) == 1


def test_fold_inverts_unfold():
    for dims in [(5,), (3, 4), (2, 3, 4), (3, 1, 2, 2)]:
        t = _rand(*dims)
        for d in range(len(dims)):
            assert np.array_equal(fold(unfold(t, d), d, dims), t), (dims, d)


def test_kron_vec_identity():
    """vec((U_1, U_2, U_3) . C) == kron(U_1, U_2, U_3) @ vec(C)"""
    us = [_rand(4, 2, seed=1), _rand(3, 2, seed=2), _rand(5, 3, seed=3)]
    c = _rand(2, 2, 3, seed=4)
    t = multilinear_multiply(us, c)
    assert np.allclose(t.ravel(), kron(*us) @ c.ravel(), atol=1e-13)


def test_unfold_multilinear_identity():
    us = [_rand(4, 2, seed=1), _rand(3, 2, seed=2), _rand(5, 3, seed=3)]
    c = _rand(2, 2, 3, seed=4)
    t = multilinear_multiply(us, c)
    for d in range(3):
        others = [u for k, u in enumerate(us) if k != d]
        expected = us[d] @ unfold(c, d) @ kron(*others).T
        assert np.allclose(unfold(t, d), expected, atol=1e-12), d


def test_mode_product():
    t = _rand(3, 4, 5)
    m = _rand(2, 4, seed=1)
    out = mode_product(t, 1, m)
    assert out.shape == (3, 2, 5)
    assert np.allclose(unfold(out, 1), m @ unfold(t, 1))

    with pytest.raises(ValueError):
        mode_product(t, 1, _rand(2, 3))
    with pytest.raises(ValueError):
        mode_product(t, 3, m)


def test_multilinear_identity_entries():
    t = _rand(3, 4, 5)
    m = _rand(2, 5, seed=1)
    assert np.allclose(multilinear_multiply([None, None, m], t),
                       mode_product(t, 2, m))
    assert np.array_equal(multilinear_multiply([None] * 3, t), t)


def test_inner_norm():
    a, b = _rand(2, 3, 4), _rand(2, 3, 4, seed=1)
    assert abs(inner(a, b) - np.sum(a * b)) < 1e-12
    assert abs(norm(a) - np.sqrt(inner(a, a))) < 1e-12
    with pytest.raises(ValueError):
        inner(a, _rand(2, 3))


def test_invalid_tensors():
    with pytest.raises(ValueError):
        unfold(np.array([1., np.nan]), 0)
    with pytest.raises(ValueError):
        unfold(np.zeros((0, 3)), 0)
    with pytest.raises(ValueError):
        fold(_rand(3, 5), 0, (3, 4))


def test_dt_file(tmp_path):
    t = _rand(3, 1, 4, 2)
    path = str(tmp_path / 'x.dt')
    write_dt(path, t)
    assert os.path.getsize(path) == 4 + 4 + 4 + 8 * 4 + 8 * t.size
    assert np.array_equal(read_dt(path), t)

    with open(path, 'rb') as f:
        head = f.read()
    with open(path, 'wb') as f:
        f.write(head[:-8])
    with pytest.raises(ValueError):
        read_dt(path)

    with open(path, 'wb') as f:
        f.write(b'NOPE' + head[4:])
    with pytest.raises(ValueError):
        read_dt(path)


if __name__ == '__main__':
    pytest.main([__file__, "-s"])
