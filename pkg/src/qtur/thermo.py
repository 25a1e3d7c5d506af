"""System + environment scenarios: entropy production, entropy flux, unitary dynamics.

The default collision experiment couples two thermal qubits (beta_S = 0.2,
beta_E = 1.0, both with H = Pauli-Z) through a partial swap
``cos(angle) I + i sin(angle) SWAP``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .bounds import (
    ENTROPY_TOL,
    BoundReport,
    F_closed_form,
    MomentSummary,
    entropy_tur_check,
    make_report,
    triangular_tur_check,
)
from .divergences import chi2_lambda_sum, quantum_fisher_information, quantum_relative_entropy
from .errors import DegenerateDerivative, DegenerateMeans, DimensionMismatch, SingularEnvironment, SingularState
from .matrix_core import (
    PAULI_Z,
    DensityMatrix,
    Unitary,
    as_density,
    as_observable,
    as_unitary,
    check_same_dim,
    evolve,
    matrix_log_psd,
    partial_trace,
    random_observable,
    swap_operator,
    tensor_product,
)

Protocol = Literal["bath_reset", "both_reset"]
FULL_RANK_TOL = 1e-12
DEFAULT_BETA_S = 0.2
DEFAULT_BETA_E = 1.0
DEFAULT_QFI_TAUS = tuple(np.geomspace(1e-3, 1e-1, 9))
DEFAULT_CR_TAUS = tuple(np.geomspace(1e-1, 1e-4, 7))


def thermal_state(beta: float, h) -> DensityMatrix:
    """Gibbs state ``exp(-beta H) / Z``."""
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    e, v = np.linalg.eigh(as_observable(h).matrix)
    w = np.exp(-beta * (e - e.min()))
    w /= w.sum()
    m = (v * w) @ v.conj().T
    return DensityMatrix((m + m.conj().T) / 2)


def partial_swap(d: int, angle: float) -> Unitary:
    """``cos(angle) I + i sin(angle) SWAP`` on C^d (x) C^d."""
    return Unitary(math.cos(angle) * np.eye(d * d) + 1j * math.sin(angle) * swap_operator(d))


def propagator(h, tau: float) -> np.ndarray:
    """``exp(-i H tau)`` from the eigendecomposition of H."""
    e, v = np.linalg.eigh(as_observable(h).matrix)
    return (v * np.exp(-1j * e * tau)) @ v.conj().T


@dataclass(frozen=True)
class ThermoSetup:
    rho_s: DensityMatrix
    rho_e: DensityMatrix
    u: Unitary
    protocol: Protocol = "bath_reset"

    def __post_init__(self):
        object.__setattr__(self, "rho_s", as_density(self.rho_s))
        object.__setattr__(self, "rho_e", as_density(self.rho_e))
        object.__setattr__(self, "u", as_unitary(self.u))
        if self.u.dim != self.d_s * self.d_e:
            raise DimensionMismatch(f"unitary of dim {self.u.dim} does not act on {self.d_s}x{self.d_e}")
        if self.protocol not in ("bath_reset", "both_reset"):
            raise ValueError(f"unknown protocol {self.protocol!r}")

    @property
    def d_s(self) -> int:
        return self.rho_s.dim

    @property
    def d_e(self) -> int:
        return self.rho_e.dim

    @property
    def dims(self) -> tuple[int, int]:
        return self.d_s, self.d_e


def collision_setup(
    angle: float,
    beta_s: float = DEFAULT_BETA_S,
    beta_e: float = DEFAULT_BETA_E,
    h_s=PAULI_Z,
    h_e=PAULI_Z,
    protocol: Protocol = "bath_reset",
) -> ThermoSetup:
    """Two thermal qudits of equal dimension coupled by a partial swap."""
    rho_s, rho_e = thermal_state(beta_s, h_s), thermal_state(beta_e, h_e)
    check_same_dim(rho_s, rho_e)
    return ThermoSetup(rho_s, rho_e, partial_swap(rho_s.dim, angle), protocol)


def forward_states(setup: ThermoSetup) -> tuple[DensityMatrix, DensityMatrix]:
    """``(rho, sigma)`` = evolved joint state and the product reference state."""
    rho = evolve(tensor_product(setup.rho_s, setup.rho_e), setup.u)
    if setup.protocol == "bath_reset":
        rho_s_final = partial_trace(rho, "E", setup.dims)
        sigma = tensor_product(rho_s_final, setup.rho_e)
    else:
        sigma = tensor_product(setup.rho_s, setup.rho_e)
    return rho, DensityMatrix((sigma + sigma.conj().T) / 2)


def entropy_production(setup: ThermoSetup) -> float:
    rho, sigma = forward_states(setup)
    return quantum_relative_entropy(rho, sigma)


@dataclass(frozen=True)
class FluxSummary:
    """Entropy flux and the variances of ``ln rho_E`` before/after the collision."""

    phi: float
    var_t: float
    var_0: float


def flux_observable(setup: ThermoSetup) -> np.ndarray:
    """``I_S (x) ln rho_E`` on the joint space."""
    return np.kron(np.eye(setup.d_s), matrix_log_psd(setup.rho_e))


def entropy_flux_tur(setup: ThermoSetup, tol: float = ENTROPY_TOL) -> tuple[FluxSummary, BoundReport]:
    """Entropy production against the flux bound ``F(Phi, var_t, var_0)``.

    The observable ``I_S (x) ln rho_E`` is local to E, so its moments are
    evaluated on the reduced environment states.

    Raises:
        SingularEnvironment: ``rho_E`` has an eigenvalue at or below 1e-12.
    """
    if setup.rho_e.eigenvalues.min() <= FULL_RANK_TOL:
        raise SingularEnvironment("entropy flux needs a full-rank environment state")
    log_e = matrix_log_psd(setup.rho_e)
    rho, sigma = forward_states(setup)
    rho_e_final = DensityMatrix(partial_trace(rho, "S", setup.dims))
    phi = float(np.real(np.trace((setup.rho_e.matrix - rho_e_final.matrix) @ log_e)))
    summary = FluxSummary(phi, rho_e_final.variance(log_e), setup.rho_e.variance(log_e))
    bound = F_closed_form(MomentSummary(phi, summary.var_t, summary.var_0))
    report = make_report(
        quantum_relative_entropy(rho, sigma),
        bound,
        tol,
        check="flux_tur",
        phi=phi,
        var_t=summary.var_t,
        var_0=summary.var_0,
        protocol=setup.protocol,
    )
    return summary, report


def setup_tur_reports(setup: ThermoSetup, n_random: int = 10, rng_seed=None, tol: float = ENTROPY_TOL) -> list[BoundReport]:
    """Main TUR on one setup for the flux observable plus ``n_random`` random observables."""
    rho, sigma = forward_states(setup)
    rng = np.random.default_rng(rng_seed)
    observables = [("flux", flux_observable(setup))] if setup.rho_e.eigenvalues.min() > FULL_RANK_TOL else []
    observables += [(f"random{k}", random_observable(rho.dim, rng_seed=rng)) for k in range(n_random)]
    reports = []
    for name, obs in observables:
        rep = entropy_tur_check(rho, sigma, obs, tol=tol)
        rep.context["observable"] = name
        reports.append(rep)
    return reports


@dataclass(frozen=True)
class FluxRow:
    angle: float
    sigma: float
    phi: float
    var_t: float
    var_0: float
    bound: float
    slack: float
    satisfied: bool


def flux_sweep(
    angles: Sequence[float],
    beta_s: float = DEFAULT_BETA_S,
    beta_e: float = DEFAULT_BETA_E,
    h_s=PAULI_Z,
    h_e=PAULI_Z,
    protocol: Protocol = "bath_reset",
    tol: float = ENTROPY_TOL,
) -> list[FluxRow]:
    rows = []
    for angle in angles:
        s, rep = entropy_flux_tur(collision_setup(angle, beta_s, beta_e, h_s, h_e, protocol), tol=tol)
        rows.append(FluxRow(float(angle), rep.divergence, s.phi, s.var_t, s.var_0, rep.lower_bound, rep.slack, rep.satisfied))
    return rows


def unitary_chi2(rho, u, lam: float) -> float:
    """chi^2_lambda(rho, U rho U^dagger) from the spectrum of rho alone."""
    rho, u = as_density(rho), as_unitary(u)
    check_same_dim(rho, u)
    v, p = rho.eigenvectors, rho.eigenvalues
    w = np.abs(v.conj().T @ u.matrix @ v) ** 2
    a = np.broadcast_to(p[:, None], w.shape).ravel()
    b = np.broadcast_to(p[None, :], w.shape).ravel()
    return chi2_lambda_sum(a, b, w.ravel(), float(lam))


def _require_full_rank(rho: DensityMatrix) -> None:
    if rho.eigenvalues.min() <= FULL_RANK_TOL:
        raise SingularState("a full-rank state is required")


def loglog_slope(x, y) -> float:
    x, y = np.asarray(x, float), np.asarray(y, float)
    ok = (x > 0) & (y > 0)
    if ok.sum() < 2:
        return math.nan
    return float(np.polyfit(np.log(x[ok]), np.log(y[ok]), 1)[0])


@dataclass
class QFIExpansion:
    """Remainder of ``delta(rho, e^{-iH tau} rho e^{iH tau}) ~ F_Q tau^2 / 4``."""

    fisher: float
    taus: np.ndarray
    deltas: np.ndarray
    remainders: np.ndarray
    slope: float
    degenerate: bool

    def halving_ratios(self) -> np.ndarray:
        """``e(2 tau) / e(tau)`` for consecutive taus that differ by a factor of 2."""
        t, e = self.taus, self.remainders
        out = [
            e[j] / e[i]
            for i in range(len(t))
            for j in range(len(t))
            if e[i] > 0 and abs(t[j] / t[i] - 2.0) <= 1e-9
        ]
        return np.array(out)


def qfi_expansion_check(rho, h, tau_list: Sequence[float] = DEFAULT_QFI_TAUS) -> QFIExpansion:
    """Fit the log-log slope of the expansion remainder; O(tau^4) means slope ~ 4."""
    rho, h = as_density(rho), as_observable(h)
    check_same_dim(rho, h)
    _require_full_rank(rho)
    fq = quantum_fisher_information(rho, h)
    taus = np.asarray(tau_list, float)
    deltas = np.array([unitary_chi2(rho, Unitary(propagator(h, t)), 0.5) for t in taus])
    rem = np.abs(deltas - fq * taus**2 / 4)
    degenerate = fq == 0.0 and bool(np.all(deltas == 0.0))
    return QFIExpansion(fq, taus, deltas, rem, math.nan if degenerate else loglog_slope(taus, rem), degenerate)


def neville_at_zero(x, y) -> float:
    """Value at 0 of the interpolating polynomial through ``(x, y)``."""
    x, p = list(map(float, x)), list(map(float, y))
    n = len(x)
    for k in range(1, n):
        for i in range(n - k):
            p[i] = (x[i + k] * p[i] - x[i] * p[i + 1]) / (x[i + k] - x[i])
    return p[0]


@dataclass
class CramerRaoScan:
    fisher: float
    variance: float
    derivative: float
    taus: np.ndarray
    lhs: np.ndarray
    rhs: float
    finite_differences: np.ndarray
    triangular: list[BoundReport] = field(default_factory=list)
    extrapolated_lhs: float = math.nan

    @property
    def gaps(self) -> np.ndarray:
        return self.lhs - self.rhs

    def finite_tau_holds(self, rtol: float = 1e-9) -> bool:
        return bool(np.all(self.lhs >= self.rhs * (1 - rtol)))

    @property
    def limit_relative_gap(self) -> float:
        """``(Var/(d<theta>)^2 - 1/F_Q) / (1/F_Q)`` at the extrapolated tau -> 0."""
        return (self.extrapolated_lhs / 4 - 1 / self.fisher) * self.fisher

    @property
    def derivative_errors(self) -> np.ndarray:
        return np.abs(self.finite_differences - self.derivative)


def commutator_derivative(rho, h, theta_hat) -> float:
    """``d/dt <theta>`` for ``rho(t) = e^{-iHt} rho e^{iHt}``: ``tr(theta (-i)[H, rho])``."""
    r, hm, th = as_density(rho).matrix, as_observable(h).matrix, as_observable(theta_hat).matrix
    return float(np.real(np.trace(-1j * th @ (hm @ r - r @ hm))))


def cramer_rao_limit_check(rho, h, theta_hat, tau_list: Sequence[float] = DEFAULT_CR_TAUS) -> CramerRaoScan:
    """Finite-tau uncertainty relation and its tau -> 0 Cramer-Rao limit.

    At each tau, with ``sigma = e^{-iH tau} rho e^{iH tau}``:

        lhs(tau) = 4 Var_rho(theta) / ((<theta>_sigma - <theta>_rho)^2 / tau^2),   rhs = 4 / F_Q.

    The limit value is a polynomial extrapolation of lhs through the three
    smallest taus.

    Raises:
        DegenerateDerivative: ``|d<theta>/dt|`` (commutator or forward difference) is <= 1e-8.
    """
    rho, h, theta_hat = as_density(rho), as_observable(h), as_observable(theta_hat)
    check_same_dim(rho, h, theta_hat)
    _require_full_rank(rho)
    taus = np.sort(np.asarray(tau_list, float))[::-1]
    deriv = commutator_derivative(rho, h, theta_hat)
    m0 = rho.expectation(theta_hat)
    sigmas = [evolve(rho, Unitary(propagator(h, t))) for t in taus]
    fd = np.array([(s.expectation(theta_hat) - m0) / t for s, t in zip(sigmas, taus)])
    if abs(deriv) <= 1e-8 or abs(fd[-1]) <= 1e-8:
        raise DegenerateDerivative(f"d<theta>/dt = {deriv:.3e} (finite difference {fd[-1]:.3e})")
    fq = quantum_fisher_information(rho, h)
    var = rho.variance(theta_hat)
    lhs = 4 * var / fd**2
    tri = []
    for s in sigmas:
        try:
            tri.append(triangular_tur_check(rho, s, theta_hat))
        except DegenerateMeans:
            continue
    k = min(3, len(taus))
    extrap = neville_at_zero(taus[-k:], lhs[-k:])
    return CramerRaoScan(fq, var, deriv, taus, lhs, 4 / fq, fd, tri, extrap)
