import numpy as np
import pytest

from gera.problems import gen_cfdd, gen_toeplitz, random_block


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture(scope="session")
def cfdd_l1_small():
    return gen_cfdd("L1", 10)


@pytest.fixture(scope="session")
def cfdd_l1_50():
    return gen_cfdd("L1", 50)


@pytest.fixture(scope="session")
def toeplitz_200():
    return gen_toeplitz(200, variant="classic")


def make_spd(n, rng, lo=0.5, hi=10.0):
    """Random dense SPD matrix with spectrum in [lo, hi]."""
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    w = np.linspace(lo, hi, n)
    return (Q * w) @ Q.T


def make_sparse_dd(n, rng, density=0.05, p_diag=8.0):
    """Random sparse diagonally dominant matrix (well conditioned)."""
    M = np.where(rng.random((n, n)) < density,
                 rng.standard_normal((n, n)), 0.0)
    M[np.diag_indices(n)] = p_diag + rng.random(n)
    return M
