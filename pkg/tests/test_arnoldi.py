import numpy as np
import pytest

from gera.arnoldi import (BreakdownError, GeraProcess, KrylovBasis,
                          _recover_T_arrays, arnoldi_residual, gera_build,
                          gera_step, projection_direct, recover_T,
                          recover_T_symmetric)
from gera.blocks import diamond_product
from gera.problems import gen_cfdd, gen_toeplitz
from gera.sparse import CSRMatrix

from conftest import make_spd, make_sparse_dd


def test_identity_breaks_down_immediately():
    A = CSRMatrix.identity(4)
    basis, pd = gera_build(A, np.ones((4, 1)), [0.5])
    assert basis.breakdown
    assert len(basis) == 1
    # the relation holds exactly on the truncated basis
    assert arnoldi_residual(A, basis, pd) <= 1e-12


def test_step_orthogonalizes_new_pair():
    A = CSRMatrix.from_dense(np.diag(np.arange(1.0, 7.0)))
    proc = GeraProcess(A, np.ones((6, 1)))
    assert gera_step(proc, 0.5)
    blocks = proc._buf[:4].reshape(4, 6, 1)
    G = diamond_product(blocks, blocks)
    assert np.abs(G - np.eye(4)).max() <= 1e-12


def test_step_cfdd_normalizers_positive():
    A = gen_cfdd("L1", 20)
    rng = np.random.default_rng(0)
    proc = GeraProcess(A, rng.random((A.n, 3)))
    for j in range(1, 9):
        assert proc.step(0.1 * j)
    H = proc._H
    for j in range(1, 9):
        assert H[2 * j, 2 * j - 2] > 1e-12
        assert H[2 * j + 1, 2 * j - 1] > 1e-12


def test_first_block_is_normalized_input(rng):
    A = CSRMatrix.from_dense(make_sparse_dd(20, rng))
    V = rng.standard_normal((20, 2))
    basis, _ = gera_build(A, V, [-0.5, -1.0])
    np.testing.assert_array_equal(basis.blocks[0],
                                  V / np.linalg.norm(V))


def test_build_orthonormality_printed_toeplitz(rng):
    A = gen_toeplitz(100, variant="printed")
    V = rng.standard_normal((100, 2))
    basis, _ = gera_build(A, V, [-0.1 * (i + 1) for i in range(5)])
    G = diamond_product(basis.blocks, basis.blocks)
    assert np.abs(G - np.eye(len(basis))).max() <= 1e-10


def test_eigenblock_input_breaks_down_within_span():
    A = CSRMatrix.from_dense(np.diag(np.arange(1.0, 11.0)))
    e1 = np.zeros((10, 1))
    e1[0, 0] = 1.0
    basis, pd = gera_build(A, e1, [0.5, 0.6])
    assert basis.breakdown
    # every kept block stays in span{e1}
    for b in basis.blocks:
        assert np.abs(b[1:]).max() <= 1e-14
    np.testing.assert_allclose(pd.T, [[1.0]])


def test_zero_block_rejected():
    A = CSRMatrix.identity(3)
    with pytest.raises(ValueError):
        gera_build(A, np.zeros((3, 1)), [0.5])


def test_recover_T_startup_column_formula():
    # alpha_{1,2} = 0: t_{:,2} = (a11 e1 + s1 a22 e2) / a22
    m = 1
    H = np.zeros((4, 2))
    H[:, 0] = [0.3, 0.7, 1.1, 0.0]
    a11, a12, a22, s1 = 2.0, 0.0, 0.5, -0.8
    T, tau = _recover_T_arrays(H, m, a11, a12, a22, [s1])
    np.testing.assert_allclose(T[:, 0], H[:2, 0])
    np.testing.assert_allclose(T[:, 1], [a11 / a22, s1])
    np.testing.assert_allclose(tau, [H[2, 0], 0.0])


def test_recover_T_matches_direct_projection_spd(rng):
    M = make_spd(30, rng)
    A = CSRMatrix.from_dense(M)
    V = rng.standard_normal((30, 2))
    basis, pd = gera_build(A, V, [-0.4, -0.9, -1.5])
    T, tau = recover_T(pd)
    Td = projection_direct(A, basis.blocks, k=2 * pd.m)
    assert np.abs(T - Td).max() <= 1e-10 * max(1.0, np.abs(Td).max())


def test_recover_T_matches_direct_projection_cfdd():
    A = gen_cfdd("L2", 20)
    rng = np.random.default_rng(3)
    V = rng.random((A.n, 2))
    basis, pd = gera_build(A, V, [-0.5, -1.0, -1.5, -2.0])
    T, _ = recover_T(pd)
    Td = projection_direct(A, basis.blocks, k=2 * pd.m)
    assert np.abs(T - Td).max() <= 1e-9 * max(1.0, np.abs(Td).max())


def test_recover_T_symmetric_paths_agree(toeplitz_200, rng):
    A = toeplitz_200
    V = rng.standard_normal((200, 2))
    basis, pd = gera_build(A, V, [-0.1 * (i + 1) for i in range(5)])
    Ts = recover_T_symmetric(pd)
    T, _ = recover_T(pd)
    Td = projection_direct(A, basis.blocks, k=2 * pd.m)
    scale = max(1.0, np.abs(Td).max())
    assert np.abs(Ts - T).max() <= 1e-10 * scale
    assert np.abs(Ts - Td).max() <= 1e-10 * scale


def test_recover_T_symmetric_diagonal_m1():
    A = CSRMatrix.from_dense(np.diag([1.0, 2.0, 3.0, 4.0]))
    V = np.ones((4, 1))
    basis, pd = gera_build(A, V, [-0.3])
    Ts = recover_T_symmetric(pd)
    Td = projection_direct(A, basis.blocks, k=2)
    np.testing.assert_allclose(Ts, Td, atol=1e-12)
    np.testing.assert_allclose(Ts, Ts.T)


def test_recover_T_symmetric_pentadiagonal(toeplitz_200, rng):
    V = rng.standard_normal((200, 3))
    _, pd = gera_build(toeplitz_200, V, [-0.2 * (i + 1) for i in range(4)])
    Ts = recover_T_symmetric(pd)
    k = Ts.shape[0]
    off = max(abs(Ts[i, j]) for i in range(k) for j in range(k)
              if abs(i - j) > 2)
    assert off <= 1e-10


def test_recover_guards_division():
    H = np.zeros((4, 2))
    with pytest.raises(BreakdownError):
        _recover_T_arrays(H, 1, 1.0, 0.0, 0.0, [0.5])


def test_arnoldi_relation_small_exact(rng):
    # n = 8 with simple rational entries
    M = np.diag(np.arange(1.0, 9.0)) + np.diag(0.5 * np.ones(7), 1)
    A = CSRMatrix.from_dense(M)
    V = np.ones((8, 1))
    basis, pd = gera_build(A, V, [-0.5, -1.5])
    assert arnoldi_residual(A, basis, pd) <= 1e-12


def test_arnoldi_relation_cfdd(cfdd_l1_50):
    rng = np.random.default_rng(9)
    V = rng.random((cfdd_l1_50.n, 5))
    basis, pd = gera_build(cfdd_l1_50, V,
                           [-0.3 * (i + 1) for i in range(10)])
    assert arnoldi_residual(cfdd_l1_50, basis, pd) <= 1e-9


def test_power_block_membership(rng):
    # A V_{2j-1} lies in span{V_1..V_{2j+1}}
    M = make_sparse_dd(40, rng)
    A = CSRMatrix.from_dense(M)
    V = rng.standard_normal((40, 2))
    basis, pd = gera_build(A, V, [-0.5, -1.0, -2.0])
    F = basis.blocks.reshape(len(basis), -1)
    for j in range(1, pd.m + 1):
        w = A.matvec(basis.blocks[2 * j - 2]).ravel()
        sub = F[:2 * j + 1]
        resid = w - sub.T @ (sub @ w)
        assert np.linalg.norm(resid) <= 1e-9 * np.linalg.norm(w)


def test_projection_guard_recovers_from_unstable_recurrence(rng):
    # the saturated printed-variant matrix destabilizes the recurrences;
    # the guarded projection must still match the direct one
    A = gen_toeplitz(300, variant="printed")
    V = rng.standard_normal((300, 2))
    proc = GeraProcess(A, V)
    for i in range(8):
        proc.step(-0.5 * (i + 1))
    T, tau = proc.projection()
    Td = projection_direct(A, proc._buf[:proc.k].reshape(proc.k, 300, 2),
                           k=2 * proc.m)
    assert np.abs(T - Td).max() <= 1e-7 * max(1.0, np.abs(Td).max())


def test_realized_poles():
    A = CSRMatrix.from_dense(np.diag(np.arange(1.0, 21.0)))
    V = np.ones((20, 2))
    _, pd = gera_build(A, V, [-1.0, -2.0, -3.0])
    assert pd.realized_poles == (-1.0, -1.0, -2.0)


def test_basis_snapshot_roundtrip(tmp_path, rng):
    A = CSRMatrix.from_dense(make_sparse_dd(15, rng))
    basis, _ = gera_build(A, rng.standard_normal((15, 1)), [-0.5])
    path = tmp_path / "basis.npz"
    basis.save(path)
    loaded = KrylovBasis.load(path)
    np.testing.assert_array_equal(loaded.blocks, basis.blocks)
    assert loaded.m == basis.m and loaded.breakdown == basis.breakdown
