"""Classical corner: trajectory ensembles and reduction of the quantum pipeline.

Trajectories are abstract indices ``0..n-1``. Time reversal is an involution
``pi`` with ``pi[pi[k]] == k``; the backward weight of trajectory ``k`` is
``P_B(pi(k))``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .bounds import (
    ENTROPY_TOL,
    BoundReport,
    F_closed_form,
    MomentSummary,
    entropy_tur_check,
    f_lambda,
    make_report,
)
from .divergences import (
    classical_chi2_lambda,
    classical_kl,
    quantum_chi2_lambda,
    quantum_relative_entropy,
    triangular_discrimination,
)
from .ns_map import ns_distributions

CLASSICAL_TUR_TOL = 1e-9
REDUCTION_TOL = 1e-10
DEFAULT_LAMBDA_GRID = tuple(np.round(np.arange(1, 10) / 10, 1))


@dataclass(frozen=True)
class TrajectoryEnsemble:
    forward: np.ndarray
    backward: np.ndarray
    involution: np.ndarray
    observable: np.ndarray

    def __post_init__(self):
        for name, dtype in (("forward", float), ("backward", float), ("involution", int), ("observable", float)):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=dtype))
        n = len(self.forward)
        if not (len(self.backward) == len(self.involution) == len(self.observable) == n):
            raise ValueError("ensemble arrays must share one length")
        if sorted(self.involution.tolist()) != list(range(n)) or np.any(self.involution[self.involution] != np.arange(n)):
            raise ValueError("involution must be a permutation with pi(pi(k)) = k")
        for name in ("forward", "backward"):
            w = getattr(self, name)
            if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-10:
                raise ValueError(f"{name} weights must be a probability distribution")

    @property
    def n_traj(self) -> int:
        return len(self.forward)

    @property
    def reversed_backward(self) -> np.ndarray:
        """``q(k) = P_B(pi(k))``: law of a trajectory whose reversal is drawn from P_B."""
        return self.backward[self.involution]

    def to_dict(self) -> dict:
        return {
            "forward": self.forward.tolist(),
            "backward": self.backward.tolist(),
            "involution": self.involution.tolist(),
            "observable": self.observable.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrajectoryEnsemble":
        return cls(d["forward"], d.get("backward", d["forward"]), d["involution"], d["observable"])

    @classmethod
    def from_json(cls, path) -> "TrajectoryEnsemble":
        return cls.from_dict(json.loads(Path(path).read_text()))


def random_involution(n: int, rng: np.random.Generator, n_fixed: int | None = None) -> np.ndarray:
    perm = rng.permutation(n)
    n_fixed = int(rng.integers(0, n + 1)) if n_fixed is None else n_fixed
    if (n - n_fixed) % 2:
        n_fixed += 1
    pi = np.arange(n)
    paired = perm[n_fixed:]
    for a, b in zip(paired[0::2], paired[1::2]):
        pi[a], pi[b] = b, a
    return pi


def random_ensemble(n: int, rng_seed=None, parity: int | None = None, equal_laws: bool = False) -> TrajectoryEnsemble:
    """Random ensemble; ``parity`` in {-1, 1} imposes ``theta(pi(k)) = parity * theta(k)``."""
    rng = np.random.default_rng(rng_seed)
    pi = random_involution(n, rng)
    fwd = rng.dirichlet(np.ones(n))
    bwd = fwd.copy() if equal_laws else rng.dirichlet(np.ones(n))
    theta = rng.standard_normal(n)
    if parity is not None:
        theta = (theta + parity * theta[pi]) / 2
    return TrajectoryEnsemble(fwd, bwd, pi, theta)


def classical_entropy_production(ens: TrajectoryEnsemble) -> float:
    """``sum_G P_F(G) ln(P_F(G) / P_B(G^dagger))``; infinite without absolute continuity."""
    return classical_kl(ens.forward, ens.reversed_backward)


def classical_tur_check(ens: TrajectoryEnsemble, tol: float = CLASSICAL_TUR_TOL) -> BoundReport:
    m = MomentSummary.from_distributions(ens.forward, ens.reversed_backward, ens.observable)
    return make_report(classical_entropy_production(ens), F_closed_form(m), tol, check="classical_tur", a=m.a, y=m.y, z=m.z)


@dataclass(frozen=True)
class ReductionReport:
    """Absolute differences between the quantum pipeline and the classical formulas."""

    kl: float
    ns_kl: float
    chi2: float
    triangular: float
    f_bound: float
    F_bound: float

    @property
    def max_discrepancy(self) -> float:
        return max(self.kl, self.ns_kl, self.chi2, self.triangular, self.f_bound, self.F_bound)

    def holds(self, tol: float = REDUCTION_TOL) -> bool:
        return self.max_discrepancy <= tol


def _diff(x: float, y: float) -> float:
    if np.isinf(x) or np.isinf(y):
        return 0.0 if x == y else np.inf
    return abs(x - y)


def commuting_reduction_check(p_eigs, q_eigs, theta_vals, lam_grid: Sequence[float] = DEFAULT_LAMBDA_GRID) -> ReductionReport:
    """Diagonal states and observable through the quantum pipeline vs direct classical sums."""
    p, q, th = (np.asarray(v, float) for v in (p_eigs, q_eigs, theta_vals))
    rho, sigma, theta_hat = np.diag(p).astype(complex), np.diag(q).astype(complex), np.diag(th).astype(complex)
    kl = classical_kl(p, q)
    ns_p, ns_q = ns_distributions(rho, sigma)
    m_cl = MomentSummary.from_distributions(p, q, th)
    m_q = MomentSummary.from_states(rho, sigma, theta_hat)
    chi2 = max(_diff(quantum_chi2_lambda(rho, sigma, lam), classical_chi2_lambda(p, q, lam)) for lam in lam_grid)
    fb = max(
        _diff(lam * f_lambda(m_q.a, m_q.y, m_q.z, lam), lam * f_lambda(m_cl.a, m_cl.y, m_cl.z, lam)) for lam in lam_grid
    )
    on = (p + q) > 0
    tri_cl = 0.5 * float(np.sum((p[on] - q[on]) ** 2 / (p[on] + q[on])))
    tri = _diff(triangular_discrimination(rho, sigma), tri_cl)
    rep = entropy_tur_check(rho, sigma, theta_hat, tol=ENTROPY_TOL)
    return ReductionReport(
        kl=_diff(quantum_relative_entropy(rho, sigma), kl),
        ns_kl=_diff(classical_kl(ns_p, ns_q), kl),
        chi2=chi2,
        triangular=tri,
        f_bound=fb,
        F_bound=_diff(rep.lower_bound, F_closed_form(m_cl)),
    )
