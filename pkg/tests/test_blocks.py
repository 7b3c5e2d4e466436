import numpy as np
import pytest

from gera.blocks import basis_combine, diamond_product, frobenius_inner


def test_frobenius_identity_trace():
    assert frobenius_inner(np.eye(2), np.eye(2)) == 2.0


def test_frobenius_disjoint_supports():
    X = np.array([[1.0, 0.0], [0.0, 0.0]])
    Y = np.array([[0.0, 0.0], [0.0, 1.0]])
    assert frobenius_inner(X, Y) == 0.0


def test_frobenius_elementwise_oracle(rng):
    G = rng.standard_normal((5, 2))
    expected = sum(G[i, j] ** 2 for i in range(5) for j in range(2))
    assert frobenius_inner(G, G) == pytest.approx(expected, rel=1e-14)


def test_frobenius_shape_mismatch():
    with pytest.raises(ValueError):
        frobenius_inner(np.ones((2, 2)), np.ones((3, 2)))


def test_diamond_unit_block():
    B = np.array([[3.0, 0.0], [0.0, 4.0]]) / 5.0
    np.testing.assert_allclose(diamond_product([B], [B]), [[1.0]],
                               atol=1e-15)


def test_diamond_orthonormal_pair():
    X = np.array([[1.0, 0.0], [0.0, 0.0]])
    Y = np.array([[0.0, 0.0], [0.0, 1.0]])
    G = diamond_product([X, Y], [X, Y])
    np.testing.assert_allclose(G, np.eye(2))


def test_diamond_trace_oracle(rng):
    M = [rng.standard_normal((6, 2)) for _ in range(3)]
    N = [rng.standard_normal((6, 2)) for _ in range(2)]
    G = diamond_product(M, N)
    assert G.shape == (3, 2)
    for i in range(3):
        for j in range(2):
            assert G[i, j] == pytest.approx(np.trace(M[i].T @ N[j]),
                                            abs=1e-13)


def test_diamond_empty():
    with pytest.raises(ValueError):
        diamond_product([], [np.ones((2, 2))])


def test_diamond_transpose_property(rng):
    M = [rng.standard_normal((7, 3)) for _ in range(4)]
    N = [rng.standard_normal((7, 3)) for _ in range(2)]
    np.testing.assert_allclose(diamond_product(M, N).T,
                               diamond_product(N, M), atol=1e-13)


def test_diamond_operator_shift_property(rng):
    # (D M_i)^T <> N_j == M_i^T <> (D^T N_j)
    D = rng.standard_normal((8, 8))
    M = [rng.standard_normal((8, 2)) for _ in range(3)]
    N = [rng.standard_normal((8, 2)) for _ in range(3)]
    left = diamond_product([D @ b for b in M], N)
    right = diamond_product(M, [D.T @ b for b in N])
    np.testing.assert_allclose(left, right, atol=1e-13)


def test_diamond_linearity_and_scaling(rng):
    A = [rng.standard_normal((6, 2)) for _ in range(2)]
    B = [rng.standard_normal((6, 2)) for _ in range(2)]
    C = [rng.standard_normal((6, 2)) for _ in range(2)]
    lhs = diamond_product([a + b for a, b in zip(A, B)], C)
    np.testing.assert_allclose(lhs, diamond_product(A, C)
                               + diamond_product(B, C), atol=1e-13)
    lhs = diamond_product(A, [b + c for b, c in zip(B, C)])
    np.testing.assert_allclose(lhs, diamond_product(A, B)
                               + diamond_product(A, C), atol=1e-13)
    np.testing.assert_allclose(diamond_product([2.5 * a for a in A], C),
                               2.5 * diamond_product(A, C), atol=1e-13)


def test_diamond_small_matrix_factor_property(rng):
    # A^T <> (B (L (x) I_p)) == (A^T <> B) L
    p, k, l = 2, 3, 3
    A = [rng.standard_normal((6, p)) for _ in range(k)]
    B = [rng.standard_normal((6, p)) for _ in range(l)]
    L = rng.standard_normal((l, l))
    BL = []
    for j in range(l):
        BL.append(sum(L[i, j] * B[i] for i in range(l)))
    np.testing.assert_allclose(diamond_product(A, BL),
                               diamond_product(A, B) @ L, atol=1e-13)


def test_basis_combine_unit_coordinate(rng):
    blocks = [rng.standard_normal((4, 2)) for _ in range(3)]
    np.testing.assert_array_equal(
        basis_combine(blocks, [1.0, 0.0, 0.0]), blocks[0])


def test_basis_combine_zero(rng):
    blocks = [rng.standard_normal((4, 2)) for _ in range(3)]
    np.testing.assert_array_equal(basis_combine(blocks, np.zeros(3)),
                                  np.zeros((4, 2)))


def test_basis_combine_kronecker_oracle(rng):
    n, p, k = 5, 2, 3
    blocks = [rng.standard_normal((n, p)) for _ in range(k)]
    y = rng.standard_normal(k)
    concat = np.hstack(blocks)                      # n x (k p)
    expected = concat @ np.kron(y.reshape(k, 1), np.eye(p))
    np.testing.assert_allclose(basis_combine(blocks, y), expected,
                               atol=1e-13)


def test_basis_combine_length_mismatch(rng):
    with pytest.raises(ValueError):
        basis_combine([rng.standard_normal((3, 1))], [1.0, 2.0])
