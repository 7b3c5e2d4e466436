import numpy as np
import pytest

from gera.arnoldi import gera_build
from gera.problems import gen_cfdd
from gera.shifts import (ShiftState, _exp_objective, estimate_spectrum,
                         g_ratio, log_abs_g, next_shift_exp, skeleton_f)
from gera.sparse import CSRMatrix


def test_log_abs_g_hand_value():
    st = ShiftState(nodes=np.array([1.0, 2.0]), poles=(3.0,))
    assert log_abs_g(0.0, st) == pytest.approx(np.log(2.0 / 3.0))


def test_log_abs_g_sentinels():
    st = ShiftState(nodes=np.array([1.0, 2.0]), poles=(3.0,))
    assert log_abs_g(1.0, st) == -np.inf
    assert log_abs_g(3.0, st) == np.inf


def test_log_abs_g_direct_product_oracle(rng):
    for _ in range(20):
        nodes = rng.uniform(-3, 3, 6)
        poles = tuple(rng.uniform(4, 8, 3))
        st = ShiftState(nodes=nodes, poles=poles)
        z = float(rng.uniform(-10, -4))
        direct = abs(np.prod(z - nodes) / np.prod(z - np.array(poles)))
        assert np.exp(log_abs_g(z, st)) == pytest.approx(direct, rel=1e-12)


def test_log_abs_g_order_m_uses_leading_nodes():
    st = ShiftState(nodes=np.array([2.0, 1.0, 5.0, 4.0]), poles=(7.0, 9.0))
    # order m uses the two smallest nodes {1, 2}
    expected = np.log(abs((0.5 - 1) * (0.5 - 2)
                          / ((0.5 - 7) * (0.5 - 9))))
    assert log_abs_g(0.5, st, "m") == pytest.approx(expected)


def test_g_ratio_signed(rng):
    nodes = np.array([1.0, 2.0, 6.0, 7.5])
    poles = (-1.0, -2.0)
    st = ShiftState(nodes=nodes, poles=poles)
    z1, z2 = 4.0, 3.0

    def g(z):
        return np.prod(z - nodes) / np.prod(z - np.array(poles))

    assert g_ratio(z1, z2, st) == pytest.approx(g(z1) / g(z2), rel=1e-12)


def _random_state(rng, m=3):
    # well separated nodes and poles
    nodes = np.sort(rng.uniform(0.5, 10.0, 2 * m))
    while np.min(np.diff(nodes)) < 0.05:
        nodes = np.sort(rng.uniform(0.5, 10.0, 2 * m))
    poles = tuple(np.sort(rng.uniform(-8.0, -0.5, m)))
    return ShiftState(nodes=nodes, poles=poles)


def test_skeleton_interpolates_all_nodes_and_poles(rng):
    for _ in range(10):
        st = _random_state(rng)
        s = float(rng.uniform(-20.0, -10.0))
        for lam in st.nodes:
            v = skeleton_f(float(lam), s, st)
            assert v == pytest.approx(1.0 / (lam - s), rel=1e-9)
        lam = float(rng.uniform(12.0, 20.0))
        for p in st.poles:
            v = skeleton_f(lam, float(p), st)
            assert v == pytest.approx(1.0 / (lam - p), rel=1e-9)


def test_skeleton_relative_error_identity(rng):
    st = ShiftState(nodes=np.array([1.0, 2.0]), poles=(4.0,))
    for _ in range(10):
        lam = float(rng.uniform(5.0, 9.0))
        s = float(rng.uniform(-3.0, -0.5))
        eps = 1.0 - (lam - s) * skeleton_f(lam, s, st)
        assert eps == pytest.approx(g_ratio(lam, s, st, "2m"), rel=1e-10)


def test_skeleton_coincident_arguments_error():
    st = ShiftState(nodes=np.array([1.0, 2.0]), poles=(4.0,))
    with pytest.raises(ValueError):
        skeleton_f(3.0, 3.0, st)


def test_next_shift_matches_grid_search():
    st = ShiftState(nodes=np.array([1.0, 3.0]), poles=(2.0,),
                    lambda_min=1.0, lambda_max=3.0)
    s = next_shift_exp(st)
    grid = np.linspace(1.0, 3.0, 100001)
    vals = np.array([_exp_objective(x, st) for x in grid])
    assert s == pytest.approx(grid[int(np.argmax(vals))], abs=1e-4)


def test_next_shift_clustered_nodes_boundary_wins():
    nodes = np.array([1.5, 1.5 + 1e-9, 1.5 + 2e-9])
    st = ShiftState(nodes=nodes, poles=(), lambda_min=1.0, lambda_max=2.0)
    s = next_shift_exp(st)
    assert s in (1.0, 2.0)


def test_next_shift_degenerate_nodes_midpoint():
    st = ShiftState(nodes=np.array([2.0, 2.0]), poles=(),
                    lambda_min=1.0, lambda_max=3.0)
    assert next_shift_exp(st) == pytest.approx(2.0)


def test_next_shift_never_returns_existing_pole(rng):
    for _ in range(10):
        st = _random_state(rng)
        st.lambda_min, st.lambda_max = 0.5, 10.0
        s = next_shift_exp(st)
        assert 0.5 <= s <= 10.0
        assert all(abs(s - (-p)) > 1e-12 for p in st.poles)


def test_next_shift_improves_worst_residual_bound():
    # greedy property on a real run: adding the selected shift lowers the
    # worst residual-bound surrogate more than re-adding any old one
    A = gen_cfdd("L3", 12)
    rng = np.random.default_rng(4)
    V = rng.random((A.n, 2))
    basis, pd = gera_build(A, V, [-20.0, -200.0, -800.0, -2000.0])
    lmin, lmax = 19.0, 2300.0
    st = ShiftState(nodes=pd.ritz, poles=pd.shifts,
                    lambda_min=lmin, lambda_max=lmax)
    s_new = next_shift_exp(st)
    assert lmin <= s_new <= lmax
    grid = np.linspace(lmin, lmax, 4001)

    def worst(extra_pole):
        poles = list(pd.shifts) + [extra_pole]
        stx = ShiftState(nodes=pd.ritz, poles=tuple(poles))
        return max(_exp_objective(x, stx) for x in grid)

    for old in (-s for s in (20.0, 200.0, 800.0, 2000.0)):
        assert worst(-s_new) < worst(old)


def test_estimate_spectrum_diag():
    A = CSRMatrix.from_dense(np.diag(np.arange(1.0, 11.0)))
    lo, hi = estimate_spectrum(A)
    assert lo == pytest.approx(1.0, rel=1e-3)
    assert hi == pytest.approx(10.0, rel=1e-3)


def test_estimate_spectrum_brackets_ritz(toeplitz_200, rng):
    lo, hi = estimate_spectrum(toeplitz_200)
    V = rng.standard_normal((200, 2))
    _, pd = gera_build(toeplitz_200, V, [-0.1 * (i + 1) for i in range(5)])
    ritz = pd.ritz.real
    slack = 1e-2 * (hi - lo)
    assert ritz.min() >= lo - slack
    assert ritz.max() <= hi + slack
