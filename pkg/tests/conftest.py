import numpy as np
import pytest

from qtur.matrix_core import DensityMatrix, random_density_matrix, random_observable


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_triple(rng, dim, rank_rho=None, rank_sigma=None, scale=1.0):
    rho = random_density_matrix(dim, rank_rho, rng)
    sigma = random_density_matrix(dim, rank_sigma, rng)
    theta = random_observable(dim, scale, rng)
    return rho, sigma, theta


def ket(*amps):
    v = np.asarray(amps, dtype=complex)
    return v / np.linalg.norm(v)


def projector(v):
    return DensityMatrix(np.outer(v, np.conj(v)))


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
