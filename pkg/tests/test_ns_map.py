import json

import numpy as np
import pytest

from conftest import ket, projector, random_triple
from qtur.divergences import classical_kl, quantum_relative_entropy
from qtur.errors import DimensionMismatch
from qtur.matrix_core import PAULI_Z, DensityMatrix, random_density_matrix
from qtur.ns_map import (
    NSPair,
    is_distribution,
    ns_distributions,
    ns_pair,
    ns_theta,
    overlaps,
    variance_domination_check,
)


def test_shared_eigenbasis_example():
    p, q = ns_distributions(np.eye(2) / 2, np.eye(2) / 2)
    np.testing.assert_allclose(p, [0.5, 0, 0, 0.5])
    np.testing.assert_allclose(q, [0.5, 0, 0, 0.5])


def test_zero_and_plus_example():
    # ascending order: i=1 is |0> (p=1); j=1 is |+> (q=1), j=0 is |->
    rho = DensityMatrix(np.diag([1.0, 0.0]))
    sigma = projector(ket(1, 1))
    p, q = ns_distributions(rho, sigma)
    np.testing.assert_allclose(p, [0, 0, 0.5, 0.5], atol=1e-15)
    np.testing.assert_allclose(q, [0, 0.5, 0, 0.5], atol=1e-15)
    # ordering-free content: P puts 1/2 on (|0>,|->) and (|0>,|+>); Q puts 1/2 on (|1>,|+>) and (|0>,|+>)
    assert sorted(p) == pytest.approx([0, 0, 0.5, 0.5])
    assert sorted(q) == pytest.approx([0, 0, 0.5, 0.5])


def test_entries_match_definition(rng):
    rho, sigma, _ = random_triple(rng, 3)
    p, q = ns_distributions(rho, sigma)
    w = np.abs(rho.eigenvectors.conj().T @ sigma.eigenvectors) ** 2
    for i in range(3):
        for j in range(3):
            assert abs(p[3 * i + j] - rho.eigenvalues[i] * w[i, j]) <= 1e-12
            assert abs(q[3 * i + j] - sigma.eigenvalues[j] * w[i, j]) <= 1e-12


def test_distributions_normalized(rng):
    for _ in range(50):
        rho, sigma, _ = random_triple(rng, 3)
        p, q = ns_distributions(rho, sigma)
        assert is_distribution(p) and is_distribution(q)
        assert abs(p.sum() - 1) <= 1e-10 and abs(q.sum() - 1) <= 1e-10


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        ns_distributions(np.eye(2) / 2, np.eye(3) / 3)
    with pytest.raises(DimensionMismatch):
        ns_theta(np.eye(2) / 2, np.eye(2) / 2, np.eye(3))


def test_identity_observable_gives_unit_theta(rng):
    rho, sigma, _ = random_triple(rng, 4)
    theta = ns_theta(rho, sigma, np.eye(4))
    w = np.abs(overlaps(rho, sigma)).ravel() ** 2
    np.testing.assert_allclose(theta[w >= 1e-14], 1.0, atol=1e-9)


def test_commuting_triple_theta_diagonal():
    rho = np.diag([0.1, 0.3, 0.6])
    sigma = np.diag([0.2, 0.5, 0.3])
    th = np.diag([2.0, -1.0, 0.5])
    pair = ns_pair(rho, sigma, th)
    sigma_vals = np.linalg.eigh(sigma)[1]
    # map each sigma eigenvector back to its basis index
    t = pair.theta.reshape(3, 3)
    for i in range(3):
        for j in range(3):
            same = np.argmax(np.abs(sigma_vals[:, j])) == i
            if same:
                assert t[i, j] == pytest.approx(np.diag(th)[i])
            else:
                assert t[i, j] == 0


def test_overlap_cutoff_sets_theta_zero():
    theta = ns_theta(np.diag([1.0, 0.0]), np.diag([0.0, 1.0]), PAULI_Z)
    w = np.abs(overlaps(np.diag([1.0, 0.0]), np.diag([0.0, 1.0]))).ravel() ** 2
    assert np.all(theta[w < 1e-14] == 0)


def test_mean_identity(rng):
    for _ in range(50):
        rho, sigma, th = random_triple(rng, 4)
        pair = ns_pair(rho, sigma, th)
        assert abs(pair.mean("p") - rho.expectation(th)) <= 1e-9
        assert abs(pair.mean("q") - sigma.expectation(th)) <= 1e-9


def test_variance_domination_commuting_equality():
    rho = np.diag([0.1, 0.3, 0.6])
    sigma = np.diag([0.2, 0.5, 0.3])
    th = np.diag([2.0, -1.0, 0.5])
    vd = variance_domination_check(ns_pair(rho, sigma, th), rho, sigma, th)
    assert max(abs(m) for m in vd.margins) <= 1e-10


def test_variance_domination_z_eigenstate():
    rho = DensityMatrix(np.diag([1.0, 0.0]))
    sigma = projector(ket(1, 1))
    vd = variance_domination_check(ns_pair(rho, sigma, PAULI_Z), rho, sigma, PAULI_Z)
    assert vd.quantum_rho == pytest.approx(0.0, abs=1e-15)
    assert vd.classical_p <= 1e-9
    assert vd.holds()


def test_variance_domination_campaign(rng):
    for k in range(300):
        d = 2 + k % 5
        rho, sigma, th = random_triple(rng, d, rank_rho=int(rng.integers(1, d + 1)))
        assert variance_domination_check(ns_pair(rho, sigma, th), rho, sigma, th).holds(1e-9)


def test_kl_identity(rng):
    for k in range(100):
        d = 2 + k % 4
        rho, sigma, _ = random_triple(rng, d, rank_rho=int(rng.integers(1, d + 1)))
        p, q = ns_distributions(rho, sigma)
        assert abs(classical_kl(p, q) - quantum_relative_entropy(rho, sigma)) <= 1e-8


def test_commuting_reduces_to_spectra():
    p_vals, q_vals = np.array([0.2, 0.3, 0.5]), np.array([0.6, 0.1, 0.3])
    p, q = ns_distributions(np.diag(p_vals), np.diag(q_vals))
    assert sorted(p[p > 0]) == pytest.approx(sorted(p_vals))
    assert sorted(q[q > 0]) == pytest.approx(sorted(q_vals))


def test_json_round_trip(rng):
    rho, sigma, th = random_triple(rng, 3)
    pair = ns_pair(rho, sigma, th)
    d = json.loads(pair.to_json())
    assert d["index_pairs"][4] == [1, 1]
    back = NSPair.from_dict(d)
    np.testing.assert_array_equal(back.p, pair.p)
    np.testing.assert_array_equal(back.theta, pair.theta)
    assert pair.pair_index(pair.flat_index(2, 1)) == (2, 1)


def test_rank_deficient_pair_support(rng):
    rho = random_density_matrix(4, 2, rng)
    sigma = random_density_matrix(4, 4, rng)
    p, q = ns_distributions(rho, sigma)
    assert np.all(p.reshape(4, 4)[rho.eigenvalues == 0] == 0)
