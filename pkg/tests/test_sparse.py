import numpy as np
import pytest

from gera.sparse import (CSRMatrix, SingularShiftError, factor_shifted,
                         solve_shifted)

from conftest import make_sparse_dd


def test_from_coo_sums_duplicates():
    A = CSRMatrix.from_coo(2, [0, 0, 1], [1, 1, 0], [2.0, 3.0, 4.0])
    np.testing.assert_allclose(A.to_dense(), [[0, 5], [4, 0]])


def test_validation_rejects_bad_indices():
    with pytest.raises(ValueError):
        CSRMatrix(2, [0, 1, 2], [0, 5], [1.0, 1.0])
    with pytest.raises(ValueError):
        CSRMatrix(2, [0, 1, 2], [0, 0], [1.0, np.inf])


def test_matvec_matches_dense(rng):
    M = make_sparse_dd(60, rng)
    A = CSRMatrix.from_dense(M)
    B = rng.standard_normal((60, 3))
    np.testing.assert_allclose(A.matvec(B), M @ B, atol=1e-12)
    v = rng.standard_normal(60)
    np.testing.assert_allclose(A.matvec(v), M @ v, atol=1e-12)


def test_transpose_and_symmetry(rng):
    M = make_sparse_dd(30, rng)
    A = CSRMatrix.from_dense(M)
    np.testing.assert_allclose(A.transpose().to_dense(), M.T)
    S = CSRMatrix.from_dense(M + M.T)
    assert S.is_symmetric()
    assert not A.is_symmetric()


def test_factor_diagonal_example():
    A = CSRMatrix.from_dense(np.diag([2.0, 3.0]))
    f = factor_shifted(A, 1.0)
    np.testing.assert_allclose(f.solve(np.array([1.0, 1.0])), [1.0, 0.5])


def test_factor_singular_shift_names_value():
    A = CSRMatrix.from_dense(np.diag([2.0, 3.0]))
    with pytest.raises(SingularShiftError, match="2.0"):
        factor_shifted(A, 2.0)


def test_factor_cfdd_residual(cfdd_l1_small):
    A = cfdd_l1_small
    rng = np.random.default_rng(5)
    B = rng.random((A.n, 2))
    f = factor_shifted(A, 0.5)
    X = f.solve(B)
    R = A.matvec(X) - 0.5 * X - B
    assert np.linalg.norm(R) <= 1e-12 * np.linalg.norm(B) * A.frob_norm()


def test_solve_zero_rhs(cfdd_l1_small):
    f = factor_shifted(cfdd_l1_small, -1.0)
    X = f.solve(np.zeros((cfdd_l1_small.n, 3)))
    assert np.all(X == 0.0)


def test_solve_diagonal_inverse():
    A = CSRMatrix.from_dense(np.diag([2.0, 3.0]))
    f = factor_shifted(A, 0.0)
    np.testing.assert_allclose(f.solve(np.array([[2.0], [3.0]])),
                               [[1.0], [1.0]])


def test_solve_random_block_residual(rng):
    M = make_sparse_dd(50, rng)
    A = CSRMatrix.from_dense(M)
    B = rng.standard_normal((50, 3))
    s = 0.7
    X = solve_shifted(factor_shifted(A, s), B)
    R = (M - s * np.eye(50)) @ X - B
    assert np.linalg.norm(R) <= 1e-10 * np.linalg.norm(B)


def test_solve_shape_mismatch(cfdd_l1_small):
    f = factor_shifted(cfdd_l1_small, 0.0)
    with pytest.raises(ValueError):
        f.solve(np.ones((3, 1)))


def test_complex_shift_rejected(cfdd_l1_small):
    with pytest.raises(ValueError, match="complex"):
        factor_shifted(cfdd_l1_small, 1.0 + 2.0j)


def test_factorization_cache(cfdd_l1_small):
    f1 = factor_shifted(cfdd_l1_small, 0.25)
    f2 = factor_shifted(cfdd_l1_small, 0.25)
    assert f1 is f2
    assert factor_shifted(cfdd_l1_small, 0.2500001) is not f1


def test_right_inverse_property_moderate_conditioning(rng):
    # cond up to ~1e8: relative residual still <= 1e-10
    n = 40
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    w = np.geomspace(1e-7, 10.0, n)
    M = (Q * w) @ Q.T
    A = CSRMatrix.from_dense(M)
    B = rng.standard_normal((n, 2))
    X = factor_shifted(A, 0.0).solve(B)
    R = M @ X - B
    assert np.linalg.norm(R) <= 1e-10 * np.linalg.norm(B) * np.linalg.cond(M)


def test_dense_path_used_for_dense_matrix(rng):
    M = rng.random((40, 40)) + 40 * np.eye(40)
    A = CSRMatrix.from_dense(M)
    f = factor_shifted(A, -0.5)
    assert f._dense is not None
    B = rng.standard_normal((40, 2))
    R = (M + 0.5 * np.eye(40)) @ f.solve(B) - B
    assert np.linalg.norm(R) <= 1e-11 * np.linalg.norm(B)
