import numpy as np
import pytest

from esemsim import linalg
from esemsim.errors import InvalidInput, RankDeficit, SingularGroup


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def test_ordered_svd_reconstructs():
    rng = np.random.default_rng(1)
    a = crandn(rng, 6, 4)
    res = linalg.ordered_svd(a)
    s_mat = np.zeros((6, 4))
    np.fill_diagonal(s_mat, res.s)
    assert np.allclose(res.u @ s_mat @ res.v.conj().T, a)
    assert np.all(np.diff(res.s) <= 0)


def test_ordered_svd_deterministic_phases():
    rng = np.random.default_rng(2)
    a = crandn(rng, 5, 5)
    u1 = linalg.ordered_svd(a).u
    u2 = linalg.ordered_svd(a.copy()).u
    assert np.array_equal(u1, u2)
    for col in u1.T:
        pivot = col[np.argmax(np.abs(col))]
        assert abs(pivot.imag) < 1e-12 and pivot.real > 0


def test_ordered_svd_rejects_nonfinite():
    with pytest.raises(InvalidInput):
        linalg.ordered_svd(np.array([[np.nan, 1.0], [0.0, 1.0]]))


def test_left_nullspace_annihilates():
    rng = np.random.default_rng(3)
    a = crandn(rng, 8, 3)
    basis = linalg.left_nullspace_basis(a, 5)
    assert basis.shape == (8, 5)
    assert np.max(np.abs(basis.conj().T @ a)) < 1e-12
    gram = basis.conj().T @ basis
    assert np.allclose(gram, np.eye(5), atol=1e-12)


def test_left_nullspace_rank_deficit():
    rng = np.random.default_rng(4)
    a = crandn(rng, 6, 4)
    with pytest.raises(RankDeficit):
        linalg.left_nullspace_basis(a, 3)


def test_zf_right_inverse_diagonal_gains():
    h = np.array([[2.0, 0.0], [0.0, 1.0]], dtype=complex)
    t, gains = linalg.zf_right_inverse(h)
    assert np.allclose(gains, [4.0, 1.0])
    prod = h @ t
    assert np.allclose(prod, np.diag(np.sqrt(gains)))


def test_zf_right_inverse_properties():
    rng = np.random.default_rng(5)
    h = crandn(rng, 4, 9)
    t, gains = linalg.zf_right_inverse(h)
    assert np.allclose(np.linalg.norm(t, axis=0), 1.0, atol=1e-12)
    prod = h @ t
    off = prod - np.diag(np.diag(prod))
    assert np.max(np.abs(off)) < 1e-10
    assert np.allclose(np.diag(prod).real, np.sqrt(gains))


def test_zf_right_inverse_rejects_tall():
    with pytest.raises(InvalidInput):
        linalg.zf_right_inverse(np.ones((3, 2), dtype=complex))


def test_zf_right_inverse_singular_rows():
    row = np.ones((1, 4), dtype=complex)
    h = np.vstack([row, row])
    with pytest.raises(SingularGroup):
        linalg.zf_right_inverse(h)


def test_numeric_rank():
    assert linalg.numeric_rank(np.array([3.0, 1.0, 1e-14])) == 2
    assert linalg.numeric_rank(np.array([0.0])) == 0
