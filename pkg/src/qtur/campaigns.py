"""Seeded randomized campaigns over state/observable instances.

Every instance is generated from ``SeedSequence([seed, instance_id])`` so a
single instance can be rebuilt without replaying the campaign. Results are
returned sorted by instance id whatever the worker count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import bounds, divergences, ns_map, thermo
from .classical import DEFAULT_LAMBDA_GRID, REDUCTION_TOL, commuting_reduction_check
from .errors import DegenerateDerivative
from .matrix_core import DensityMatrix, Observable, as_density, as_observable, random_density_matrix, random_observable

REPORT_COLUMNS = ("instance", "seed", "dim", "check", "lam", "divergence", "bound", "slack", "satisfied")

DEFAULT_TOLERANCES = {
    "entropy": bounds.ENTROPY_TOL,
    "chi2": bounds.CHI2_TOL,
    "triangular": bounds.TRIANGULAR_TOL,
    "ns_kl": 1e-8,
    "ns_mean": 1e-9,
    "ns_variance": 1e-9,
    "flux": bounds.ENTROPY_TOL,
    "reduce": REDUCTION_TOL,
    "cr": 1e-6,
}
TRIANGULAR_CAMPAIGN_GAP = 1e-3


def worker_count() -> int:
    cap = os.environ.get("QTUR_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            pass
    return n


def parallel_map(fn: Callable, items: Iterable, workers: int | None = None) -> list:
    items = list(items)
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def instance_rng(seed: int, instance_id: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(instance_id)]))


def _matrix_to_list(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m)]


@dataclass(frozen=True)
class Instance:
    """One random (rho, sigma, theta) triple."""

    instance_id: int
    seed: int
    dim: int
    rho: DensityMatrix
    sigma: DensityMatrix
    theta: Observable

    def to_dict(self) -> dict:
        return {
            "instance": self.instance_id,
            "seed": self.seed,
            "dim": self.dim,
            "rho": _matrix_to_list(self.rho.matrix),
            "sigma": _matrix_to_list(self.sigma.matrix),
            "theta": _matrix_to_list(self.theta.matrix),
        }


def make_instance(seed: int, instance_id: int, dims: Sequence[int], identical: bool = False) -> Instance:
    """Mostly full-rank states; about a quarter of rho and a tenth of sigma are rank-deficient."""
    rng = instance_rng(seed, instance_id)
    dim = int(dims[instance_id % len(dims)])
    rank_rho = dim if rng.random() < 0.75 else int(rng.integers(1, dim + 1))
    rank_sigma = dim if rng.random() < 0.9 else int(rng.integers(1, dim + 1))
    rho = random_density_matrix(dim, rank_rho, rng)
    sigma = rho if identical else random_density_matrix(dim, rank_sigma, rng)
    theta = random_observable(dim, float(rng.uniform(0.2, 3.0)), rng)
    return Instance(instance_id, int(seed), dim, rho, sigma, theta)


@dataclass
class CampaignResult:
    columns: tuple[str, ...]
    rows: list[dict]
    summary: dict
    violations: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _row(inst: Instance, check: str, lam, value, ref, slack, ok) -> dict:
    return {
        "instance": inst.instance_id,
        "seed": inst.seed,
        "dim": inst.dim,
        "check": check,
        "lam": "" if lam is None else float(lam),
        "divergence": float(value),
        "bound": float(ref),
        "slack": float(slack),
        "satisfied": bool(ok),
    }


def verify_instance(inst: Instance, lambda_grid: Sequence[float], tol: dict) -> list[dict]:
    """All bound and embedding checks for one instance."""
    rows = []
    rho, sigma, theta = inst.rho, inst.sigma, inst.theta
    rep = bounds.entropy_tur_check(rho, sigma, theta, tol=tol["entropy"])
    rows.append(_row(inst, "entropy_tur", None, rep.divergence, rep.lower_bound, rep.slack, rep.satisfied))
    for lam in lambda_grid:
        rep = bounds.chi2_lambda_tur_check(rho, sigma, theta, lam, tol=tol["chi2"])
        rows.append(_row(inst, "chi2_tur", lam, rep.divergence, rep.lower_bound, rep.slack, rep.satisfied))
        chain = bounds.chi2_chain(rho, sigma, theta, lam)
        rows.append(
            _row(inst, "chi2_chain", lam, chain.bound_ns, chain.bound_quantum,
                 chain.bound_ns - chain.bound_quantum, chain.holds(tol["chi2"]))
        )
    m = bounds.MomentSummary.from_states(rho, sigma, theta)
    if abs(m.a) > TRIANGULAR_CAMPAIGN_GAP:
        rep = bounds.triangular_tur_check(rho, sigma, theta, tol=tol["triangular"])
        rows.append(_row(inst, "triangular_tur", 0.5, rep.divergence, rep.lower_bound, rep.slack, rep.satisfied))

    pair = ns_map.ns_pair(rho, sigma, theta)
    s = divergences.quantum_relative_entropy(rho, sigma)
    d = divergences.classical_kl(pair.p, pair.q)
    if math.isinf(s) or math.isinf(d):
        rows.append(_row(inst, "ns_kl", None, s, d, 0.0 if s == d else -math.inf, s == d))
    else:
        rows.append(_row(inst, "ns_kl", None, s, d, -abs(s - d), abs(s - d) <= tol["ns_kl"] * max(1.0, abs(s))))
    for which, state in (("p", rho), ("q", sigma)):
        err = abs(pair.mean(which) - state.expectation(theta))
        rows.append(_row(inst, f"ns_mean_{which}", None, pair.mean(which).real, state.expectation(theta), -err, err <= tol["ns_mean"]))
    dom = ns_map.variance_domination_check(pair, rho, sigma, theta)
    for label, quantum, classical in (("p", dom.quantum_rho, dom.classical_p), ("q", dom.quantum_sigma, dom.classical_q)):
        margin = quantum - classical
        rows.append(_row(inst, f"ns_variance_{label}", None, quantum, classical, margin, margin >= -tol["ns_variance"]))
    return rows


def summarize(rows: list[dict], slack_key: str = "slack") -> dict:
    slacks = [r[slack_key] for r in rows if isinstance(r[slack_key], float) and math.isfinite(r[slack_key])]
    checks: dict[str, int] = {}
    for r in rows:
        if "check" in r:
            checks[r["check"]] = checks.get(r["check"], 0) + 1
    out = {
        "rows": len(rows),
        "violations": sum(1 for r in rows if not r.get("satisfied", True)),
        "min_slack": min(slacks) if slacks else None,
        "max_slack": max(slacks) if slacks else None,
    }
    if checks:
        out["checks"] = dict(sorted(checks.items()))
    return out


def verify_campaign(
    n: int,
    dims: Sequence[int] = (2, 3, 4, 5, 6),
    seed: int = 0,
    lambda_grid: Sequence[float] = DEFAULT_LAMBDA_GRID,
    tolerances: dict | None = None,
    workers: int | None = None,
) -> CampaignResult:
    tol = {**DEFAULT_TOLERANCES, **(tolerances or {})}

    def run(i: int):
        inst = make_instance(seed, i, dims)
        return inst, verify_instance(inst, lambda_grid, tol)

    rows, violations = [], []
    for inst, inst_rows in parallel_map(run, range(n), workers):
        rows.extend(inst_rows)
        bad = [r["check"] for r in inst_rows if not r["satisfied"]]
        if bad:
            violations.append({"checks": bad, "reproduction": inst.to_dict()})
    return CampaignResult(REPORT_COLUMNS, rows, summarize(rows), violations)


BOUND_TABLE_COLUMNS = ("instance", "seed", "dim", "entropy", "F_bound", "best_lambda", "lf_best", "chi2_at_best", "slack", "satisfied")


def bound_table(
    n: int,
    dims: Sequence[int] = (2, 3, 4),
    seed: int = 0,
    lambda_grid: Sequence[float] = DEFAULT_LAMBDA_GRID,
    identical: bool = False,
    tolerances: dict | None = None,
    workers: int | None = None,
) -> CampaignResult:
    """Per instance: S(rho||sigma), F bound, and the best lambda f_lambda over the grid."""
    tol = {**DEFAULT_TOLERANCES, **(tolerances or {})}

    def run(i: int):
        inst = make_instance(seed, i, dims, identical=identical)
        m = bounds.MomentSummary.from_states(inst.rho, inst.sigma, inst.theta)
        lf = [lam * bounds.f_lambda(m.a, m.y, m.z, lam) for lam in lambda_grid]
        k = int(np.argmax(lf))
        rep = bounds.entropy_tur_check(inst.rho, inst.sigma, inst.theta, tol=tol["entropy"])
        chi2_ok = divergences.quantum_chi2_lambda(inst.rho, inst.sigma, lambda_grid[k])
        row = {
            "instance": i, "seed": int(seed), "dim": inst.dim,
            "entropy": rep.divergence, "F_bound": rep.lower_bound,
            "best_lambda": float(lambda_grid[k]), "lf_best": float(lf[k]), "chi2_at_best": chi2_ok,
            "slack": rep.slack,
            "satisfied": rep.satisfied and chi2_ok >= lf[k] - tol["chi2"],
        }
        return inst, row

    rows, violations = [], []
    for inst, row in parallel_map(run, range(n), workers):
        rows.append(row)
        if not row["satisfied"]:
            violations.append({"checks": ["bound_table"], "reproduction": inst.to_dict()})
    return CampaignResult(BOUND_TABLE_COLUMNS, rows, summarize(rows), violations)


REDUCE_COLUMNS = ("instance", "seed", "dim", "kl", "ns_kl", "chi2", "triangular", "f_bound", "F_bound", "max_discrepancy", "satisfied")


def random_diagonal_triple(seed: int, instance_id: int, dims: Sequence[int]):
    rng = instance_rng(seed, instance_id)
    dim = int(dims[instance_id % len(dims)])
    return rng.dirichlet(np.ones(dim)), rng.dirichlet(np.ones(dim)), rng.standard_normal(dim) * rng.uniform(0.2, 3.0)


def reduce_campaign(
    n: int,
    dims: Sequence[int] = (2, 3, 4, 5, 6, 7, 8),
    seed: int = 0,
    lambda_grid: Sequence[float] = DEFAULT_LAMBDA_GRID,
    tolerances: dict | None = None,
    workers: int | None = None,
) -> CampaignResult:
    tol = {**DEFAULT_TOLERANCES, **(tolerances or {})}

    def run(i: int):
        p, q, th = random_diagonal_triple(seed, i, dims)
        rep = commuting_reduction_check(p, q, th, lambda_grid)
        row = {"instance": i, "seed": int(seed), "dim": len(p)}
        row.update({k: float(getattr(rep, k)) for k in ("kl", "ns_kl", "chi2", "triangular", "f_bound", "F_bound")})
        row["max_discrepancy"] = float(rep.max_discrepancy)
        row["satisfied"] = rep.holds(tol["reduce"])
        return (p, q, th), row

    rows, violations = [], []
    for (p, q, th), row in parallel_map(run, range(n), workers):
        rows.append(row)
        if not row["satisfied"]:
            violations.append({"checks": ["reduce"], "reproduction": {"p": p.tolist(), "q": q.tolist(), "theta": th.tolist()}})
    summary = {
        "rows": len(rows),
        "violations": len(violations),
        "max_discrepancy": max((r["max_discrepancy"] for r in rows), default=0.0),
    }
    return CampaignResult(REDUCE_COLUMNS, rows, summary, violations)


FLUX_COLUMNS = ("angle", "sigma", "phi", "var_t", "var_0", "bound", "slack", "satisfied")


def flux_campaign(
    angles: Sequence[float],
    beta_s: float = thermo.DEFAULT_BETA_S,
    beta_e: float = thermo.DEFAULT_BETA_E,
    h_s=None,
    h_e=None,
    protocol: thermo.Protocol = "bath_reset",
    n_random_observables: int = 10,
    seed: int = 0,
    tolerances: dict | None = None,
) -> CampaignResult:
    """Flux-bound sweep plus the main TUR for random joint observables at each angle."""
    tol = {**DEFAULT_TOLERANCES, **(tolerances or {})}
    h_s = thermo.PAULI_Z if h_s is None else h_s
    h_e = thermo.PAULI_Z if h_e is None else h_e
    rows, violations = [], []
    extra_min, extra_bad = math.inf, 0
    for k, angle in enumerate(angles):
        setup = thermo.collision_setup(angle, beta_s, beta_e, h_s, h_e, protocol)
        s, rep = thermo.entropy_flux_tur(setup, tol=tol["flux"])
        rows.append({
            "angle": float(angle), "sigma": rep.divergence, "phi": s.phi, "var_t": s.var_t, "var_0": s.var_0,
            "bound": rep.lower_bound, "slack": rep.slack, "satisfied": rep.satisfied,
        })
        if not rep.satisfied:
            violations.append({"checks": ["flux_tur"], "reproduction": {"angle": float(angle), "beta_s": beta_s, "beta_e": beta_e, "protocol": protocol}})
        for r in thermo.setup_tur_reports(setup, n_random_observables, instance_rng(seed, k), tol=tol["entropy"]):
            if math.isfinite(r.slack):
                extra_min = min(extra_min, r.slack)
            if not r.satisfied:
                extra_bad += 1
                violations.append({"checks": ["entropy_tur"], "reproduction": {"angle": float(angle), "observable": r.context["observable"], "seed": seed}})
    summary = summarize(rows)
    summary["random_observable_checks"] = len(angles) * n_random_observables
    summary["random_observable_violations"] = extra_bad
    summary["random_observable_min_slack"] = None if math.isinf(extra_min) else extra_min
    summary["violations"] = len(violations)
    return CampaignResult(FLUX_COLUMNS, rows, summary, violations)


CR_COLUMNS = ("tau", "lhs", "rhs", "gap", "fisher", "delta", "remainder", "finite_difference", "satisfied")


def cr_limit_scan(rho, h, theta_hat, taus: Sequence[float], rel_tol: float = DEFAULT_TOLERANCES["cr"]) -> CampaignResult:
    """Cramer-Rao limit rows plus the fitted O(tau^4) remainder slope of the QFI expansion.

    Per-row ``satisfied`` is the finite-tau relation ``lhs >= 4/F_Q``; the
    asserted checks are the extrapolated limit and the exact triangular
    relation at each tau. Commuting inputs give a flagged row set with F_Q = 0.
    """
    rho, h, theta_hat = as_density(rho), as_observable(h), as_observable(theta_hat)
    fq = divergences.quantum_fisher_information(rho, h)
    exp = thermo.qfi_expansion_check(rho, h)
    repro = {"rho": _matrix_to_list(rho.matrix), "h": _matrix_to_list(h.matrix), "theta": _matrix_to_list(theta_hat.matrix)}
    taus = sorted((float(t) for t in taus), reverse=True)
    deltas = [thermo.unitary_chi2(rho, thermo.propagator(h, t), 0.5) for t in taus]
    try:
        scan = thermo.cramer_rao_limit_check(rho, h, theta_hat, taus)
    except DegenerateDerivative:
        rows = [{
            "tau": t, "lhs": math.nan, "rhs": math.nan, "gap": math.nan, "fisher": fq, "delta": d,
            "remainder": abs(d - fq * t * t / 4), "finite_difference": 0.0, "satisfied": True,
        } for t, d in zip(taus, deltas)]
        summary = {"rows": len(rows), "violations": 0, "degenerate": True, "fisher": fq, "remainder_slope": exp.slope}
        return CampaignResult(CR_COLUMNS, rows, summary, [])
    rows = []
    for t, d, lhs, fdv in zip(taus, deltas, scan.lhs, scan.finite_differences):
        rows.append({
            "tau": t, "lhs": float(lhs), "rhs": scan.rhs, "gap": float(lhs - scan.rhs), "fisher": fq, "delta": d,
            "remainder": abs(d - fq * t * t / 4), "finite_difference": float(fdv),
            "satisfied": bool(lhs >= scan.rhs * (1 - 1e-9)),
        })
    limit_ok = scan.limit_relative_gap >= -rel_tol
    tri_ok = all(r.satisfied for r in scan.triangular)
    summary = {
        "rows": len(rows),
        "degenerate": False,
        "fisher": fq,
        "variance": scan.variance,
        "derivative": scan.derivative,
        "extrapolated_lhs": scan.extrapolated_lhs,
        "limit_relative_gap": scan.limit_relative_gap,
        "limit_satisfied": bool(limit_ok),
        "finite_tau_satisfied": scan.finite_tau_holds(),
        "triangular_satisfied": tri_ok,
        "remainder_slope": exp.slope,
    }
    violations = [{"checks": [name], "reproduction": repro} for name, ok in (("cr_limit", limit_ok), ("triangular_tur", tri_ok)) if not ok]
    summary["violations"] = len(violations)
    return CampaignResult(CR_COLUMNS, rows, summary, violations)
