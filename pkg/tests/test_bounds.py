import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from conftest import ket, projector, random_triple
from qtur.bounds import (
    BoundReport,
    F_closed_form,
    F_integral,
    MomentSummary,
    chi2_chain,
    chi2_lambda_tur_check,
    entropy_tur_check,
    exchange_h,
    exchange_tur_check,
    exchange_tur_g,
    f_lambda,
    hcr_bound,
    make_report,
    triangular_tur_check,
)
from qtur.divergences import classical_kl, quantum_relative_entropy
from qtur.errors import DegenerateMeans, InvalidMoments, NonPositiveArgument, ZeroVariance
from qtur.matrix_core import PAULI_X, PAULI_Z, DensityMatrix, random_density_matrix, random_observable


def f_quad(a, y, z):
    """Independent oracle: adaptive quadrature of the lambda integrand."""

    def f(lam):
        return lam * a * a / ((1 - lam) * y + lam * z + (1 - lam) * lam * a * a)

    return quad(f, 0.0, 1.0, epsabs=1e-14, epsrel=1e-13, limit=200)[0]


def test_f_lambda_examples():
    assert f_lambda(0.0, 0.3, 0.7, 0.4) == 0.0
    assert f_lambda(1.3, 0.5, 0.8, 1.0) == pytest.approx(1.3**2 / 0.8)
    assert f_lambda(1.0, 1.0, 1.0, 0.5) == pytest.approx(0.4)
    assert f_lambda(1.0, 0.0, 0.0, 1.0) == math.inf


def test_f_lambda_decreasing_in_variances():
    ys = np.linspace(0.01, 3, 30)
    for lam in (0.2, 0.5, 0.9):
        vals = [f_lambda(0.7, y, 0.4, lam) for y in ys]
        assert np.all(np.diff(vals) < 0)
        vals = [f_lambda(0.7, 0.4, z, lam) for z in ys]
        assert np.all(np.diff(vals) < 0)


def test_F_zero_mean_difference():
    assert F_closed_form(0.0, 0.4, 0.9) == 0.0
    assert F_closed_form(5e-13, 0.4, 0.9) == 0.0


def test_F_unit_anchor():
    assert F_closed_form(1.0, 1.0, 1.0) == pytest.approx(f_quad(1, 1, 1), abs=1e-12)
    assert F_closed_form(1.0, 1.0, 1.0) == pytest.approx(0.4304089409640041, abs=1e-14)


def test_F_matches_quadrature_campaign(rng):
    worst = 0.0
    for _ in range(1000):
        a = rng.uniform(-3, 3)
        y, z = rng.uniform(1e-3, 3, size=2)
        worst = max(worst, abs(F_closed_form(a, y, z) - f_quad(a, y, z)))
    assert worst <= 1e-8


def test_F_near_degenerate(rng):
    for _ in range(200):
        a = rng.choice([-1, 1]) * 10 ** rng.uniform(-6, -3)
        y, z = rng.uniform(1e-3, 3, size=2)
        assert abs(F_closed_form(a, y, z) - f_quad(a, y, z)) <= 1e-8


@pytest.mark.parametrize("a, y, z", [(2.0, 0.0, 1.0), (0.5, 1e-8, 1e-8), (1.0, 3.0, 1e-6), (1e-4, 1e-6, 1e-6)])
def test_F_edge_moments(a, y, z):
    assert F_closed_form(a, y, z) == pytest.approx(f_quad(a, y, z), abs=1e-8)
    assert F_closed_form(a, y, z) == pytest.approx(F_integral(a, y, z), abs=1e-8)


def test_F_infinite_without_sigma_variance():
    assert F_closed_form(1.0, 0.5, 0.0) == math.inf


def test_F_subnormal_variance_matches_zero():
    assert F_closed_form(1.0, 5e-324, 1.0) == pytest.approx(F_closed_form(1.0, 0.0, 1.0), rel=1e-15)
    assert F_closed_form(1.0, 0.0, 1.0) == pytest.approx(F_integral(1.0, 0.0, 1.0), rel=1e-10)


def test_F_scale_invariance_avoids_overflow():
    for k in (1e-5, 1e100, 1e150):
        assert F_closed_form(k, k * k, k * k) == pytest.approx(F_closed_form(1.0, 1.0, 1.0), rel=1e-14)
    assert F_closed_form(1e-12, 1e300, 1e300) == 0.0


@given(st.floats(1e-6, 5), st.floats(0, 5), st.floats(1e-6, 5))
@settings(max_examples=200, deadline=None)
def test_F_even_in_a(a, y, z):
    assert F_closed_form(a, y, z) == F_closed_form(-a, y, z)


def test_F_monotone_in_variances():
    grid = np.linspace(0.05, 3, 25)
    for a in (0.1, 1.0, 2.5):
        vy = [F_closed_form(a, y, 0.7) for y in grid]
        vz = [F_closed_form(a, 0.7, z) for z in grid]
        assert np.all(np.diff(vy) <= 1e-15)
        assert np.all(np.diff(vz) <= 1e-15)


def test_moment_summary_clamp():
    m = MomentSummary(0.2, -5e-13, 0.1)
    assert m.y == 0.0
    with pytest.raises(InvalidMoments):
        MomentSummary(0.2, -1e-6, 0.1)


def test_moment_summary_from_distributions():
    m = MomentSummary.from_distributions([0.9, 0.1], [0.5, 0.5], [1, -1])
    assert (m.a, m.y, m.z) == pytest.approx((0.8, 0.36, 1.0))


def test_make_report_conventions():
    assert make_report(math.inf, 3.0, 1e-9).satisfied
    assert not make_report(1.0, math.inf, 1e-9).satisfied
    r = make_report(1.0, 1.0 + 5e-10, 1e-9)
    assert r.satisfied and r.slack < 0
    assert not make_report(1.0, 1.0 + 2e-9, 1e-9).satisfied
    assert isinstance(r, BoundReport) and set(r.to_dict()) >= {"divergence", "lower_bound", "slack", "satisfied"}


def test_hcr_examples():
    p = [0.2, 0.3, 0.5]
    assert hcr_bound(p, p, [1, 2j, 3]) == (0.0, 0.0)
    chi2, bound = hcr_bound(p, [0.4, 0.4, 0.2], [2 + 1j] * 3)
    assert chi2 > 0 and bound == pytest.approx(0.0, abs=1e-20)


def test_hcr_zero_variance():
    # Q dominates P only through a weight below the variance cutoff
    with pytest.raises(ZeroVariance):
        hcr_bound([0.5, 0.5], [1.0, 1e-30], [0.0, 1.0])
    assert hcr_bound([0.5, 0.5], [1.0, 1e-30], [2.0, 2.0])[1] == 0.0


def test_hcr_without_dominance_is_trivial():
    chi2, bound = hcr_bound([0.5, 0.5], [1.0, 0.0], [0.0, 1.0])
    assert chi2 == math.inf


def test_hcr_campaign(rng):
    for k in range(1000):
        n = int(rng.integers(2, 11))
        p, q = rng.dirichlet(np.ones(n)), rng.dirichlet(np.ones(n))
        if k % 5 == 0:
            p[rng.integers(n)] = 0
            p /= p.sum()
        theta = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        chi2, bound = hcr_bound(p, q, theta)
        assert bound <= chi2 + 1e-9


def test_chi2_check_examples(rng):
    rho, sigma, th = random_triple(rng, 3)
    assert chi2_lambda_tur_check(rho, rho, th, 0.5).slack == pytest.approx(0.0, abs=1e-14)
    rep = chi2_lambda_tur_check(rho, sigma, np.eye(3), 0.3)
    assert rep.lower_bound == pytest.approx(0.0, abs=1e-20) and rep.satisfied


def test_chi2_chain_and_check_campaign(rng):
    for k in range(200):
        d = 2 + k % 5
        rho, sigma, th = random_triple(rng, d, rank_rho=int(rng.integers(1, d + 1)), scale=rng.uniform(0.2, 3))
        for lam in (0.1, 0.5, 0.9):
            assert chi2_lambda_tur_check(rho, sigma, th, lam).slack >= -1e-9
            assert chi2_chain(rho, sigma, th, lam).holds(1e-9)


def test_entropy_check_examples(rng):
    rho, sigma, th = random_triple(rng, 3)
    assert entropy_tur_check(rho, rho, th).slack == pytest.approx(0.0, abs=1e-14)
    inf_rep = entropy_tur_check(projector(ket(1, 0)), projector(ket(1, 1)), PAULI_Z)
    assert inf_rep.divergence == math.inf and inf_rep.satisfied


def test_entropy_check_commuting_matches_classical():
    p, q, th = np.array([0.1, 0.6, 0.3]), np.array([0.3, 0.3, 0.4]), np.array([1.5, -0.5, 0.2])
    rep = entropy_tur_check(np.diag(p), np.diag(q), np.diag(th))
    assert abs(rep.divergence - classical_kl(p, q)) <= 1e-10
    assert abs(rep.lower_bound - F_closed_form(MomentSummary.from_distributions(p, q, th))) <= 1e-10


def test_entropy_check_campaign(rng):
    for k in range(200):
        d = 2 + k % 5
        rho, sigma, th = random_triple(rng, d, rank_rho=int(rng.integers(1, d + 1)), scale=rng.uniform(0.2, 3))
        assert entropy_tur_check(rho, sigma, th).slack >= -1e-8


def test_bounds_invariant_under_affine_observable(rng):
    rho, sigma, th = random_triple(rng, 3)
    m = MomentSummary.from_states(rho, sigma, th)
    for c, d in ((2.5, 0.0), (-0.3, 4.0), (1.0, -7.0)):
        m2 = MomentSummary.from_states(rho, sigma, c * th.matrix + d * np.eye(3))
        assert abs(F_closed_form(m2) - F_closed_form(m)) <= 1e-10
        for lam in (0.2, 0.7):
            assert abs(lam * f_lambda(m2.a, m2.y, m2.z, lam) - lam * f_lambda(m.a, m.y, m.z, lam)) <= 1e-10


def test_mixing_path_slack_vanishes(rng):
    rho, sigma, th = random_triple(rng, 3)
    slacks = []
    for t in (0.5, 0.1, 0.02, 0.004):
        mixed = DensityMatrix((1 - t) * sigma.matrix + t * rho.matrix)
        slacks.append(entropy_tur_check(mixed, sigma, th).slack)
    assert all(s >= -1e-8 for s in slacks)
    assert np.all(np.diff(slacks) < 0) and slacks[-1] < 1e-4


def test_triangular_examples():
    rep = triangular_tur_check(projector(ket(1, 0)), projector(ket(0, 1)), PAULI_Z)
    assert rep.lower_bound == 0.0 and rep.satisfied
    with pytest.raises(DegenerateMeans):
        triangular_tur_check(np.diag([0.3, 0.7]), np.diag([0.6, 0.4]), np.eye(2))


def test_triangular_commuting_classical():
    p, q, th = np.array([0.1, 0.6, 0.3]), np.array([0.3, 0.3, 0.4]), np.array([1.5, -0.5, 0.2])
    rep = triangular_tur_check(np.diag(p), np.diag(q), np.diag(th))
    delta = 0.5 * np.sum((p - q) ** 2 / (p + q))
    m = MomentSummary.from_distributions(p, q, th)
    assert rep.divergence == pytest.approx((m.y + m.z) / (m.a**2 / 2), rel=1e-12)
    assert rep.lower_bound == pytest.approx((1 - delta) / delta, rel=1e-12)
    assert rep.satisfied


def test_triangular_campaign(rng):
    n = 0
    for k in range(400):
        d = 2 + k % 3
        rho, sigma, th = random_triple(rng, d, scale=rng.uniform(0.2, 3))
        if abs(MomentSummary.from_states(rho, sigma, th).a) <= 1e-3:
            continue
        assert triangular_tur_check(rho, sigma, th).slack >= -1e-9
        n += 1
    assert n > 300


def test_exchange_g_examples():
    h2 = 2 * math.tanh(1)
    assert exchange_h(2.0) == pytest.approx(1.523188, abs=1e-6)
    assert exchange_tur_g(h2) == pytest.approx(2.0, abs=1e-12)
    assert exchange_tur_g(1e-8) <= 1e-3
    with pytest.raises(NonPositiveArgument):
        exchange_tur_g(0.0)


def test_exchange_g_residual():
    for x in np.geomspace(1e-6, 50, 300):
        assert abs(exchange_h(exchange_tur_g(x)) - x) <= 1e-12


def test_exchange_g_monotone():
    xs = np.geomspace(1e-6, 50, 100)
    assert np.all(np.diff([exchange_tur_g(x) for x in xs]) > 0)


@pytest.mark.parametrize("s", [0.01, 0.05, 0.1, 0.5, 1.0, 2.0])
def test_exchange_two_level_family(s):
    p = np.array([math.exp(s / 2), math.exp(-s / 2)])
    p /= p.sum()
    rep = exchange_tur_check(p, [1.0, -1.0])
    assert rep.satisfied
    # this family saturates the bound
    assert rep.divergence == pytest.approx(rep.lower_bound, rel=1e-9)
    assert rep.context["entropy_production"] == pytest.approx(exchange_h(s), rel=1e-12)


def test_exchange_random_antisymmetric(rng):
    for _ in range(200):
        n = 2 * int(rng.integers(1, 6))
        p = rng.dirichlet(np.ones(n))
        half = rng.standard_normal(n // 2)
        th = np.concatenate([half, -half[::-1]])
        assert exchange_tur_check(p, th).satisfied


def test_random_qubit_reports_consistent(rng):
    rho = random_density_matrix(2, rng_seed=rng)
    sigma = random_density_matrix(2, rng_seed=rng)
    rep = entropy_tur_check(rho, sigma, PAULI_X)
    assert rep.divergence == pytest.approx(quantum_relative_entropy(rho, sigma))
    assert rep.slack == pytest.approx(rep.divergence - rep.lower_bound)
    assert random_observable(2, rng_seed=rng).dim == 2
