"""Divergence functionals between states and between classical distributions.

All functions return plain floats; ``math.inf`` is a legitimate value and
signals a support violation rather than an error.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import DivergentIntegral
from .matrix_core import as_density, as_observable, check_same_dim
from .ns_map import OVERLAP_CUTOFF, overlaps

DENOMINATOR_CUTOFF = 1e-15
QUAD_NODES = 64
QUAD_TOL = 1e-9
QUAD_MAX_PANELS = 4096
PINV_RCOND = 1e-12


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    return lam


def chi2_lambda_sum(a: np.ndarray, b: np.ndarray, weight: np.ndarray, lam: float) -> float:
    """``lam^2 sum weight (a-b)^2 / ((1-lam) a + lam b)`` with the zero conventions.

    Terms with a denominator below 1e-15 are dropped, except at ``lam == 1``
    where ``b == 0 < a`` on a nonzero weight makes the sum infinite.
    """
    if lam == 0.0:
        return 0.0
    den = (1.0 - lam) * a + lam * b
    num = (a - b) ** 2 * weight
    if lam == 1.0 and np.any((b <= 0.0) & (a > 0.0) & (weight > OVERLAP_CUTOFF)):
        return math.inf
    ok = den >= DENOMINATOR_CUTOFF
    return float(lam**2 * np.sum(num[ok] / den[ok]))


def classical_kl(p, q) -> float:
    """``sum p ln(p/q)``; ``0 ln 0 = 0`` and ``p > 0 = q`` gives ``inf``."""
    p, q = np.asarray(p, float), np.asarray(q, float)
    on = p > 0
    if np.any(on & (q <= 0)):
        return math.inf
    return float(np.sum(p[on] * np.log(p[on] / q[on])))


def classical_chi2_lambda(p, q, lam: float) -> float:
    """``chi^2(P | (1-lam) P + lam Q)``; at ``lam = 1`` the ordinary chi-squared."""
    lam = _check_lambda(lam)
    p, q = np.asarray(p, float), np.asarray(q, float)
    return chi2_lambda_sum(p, q, np.ones_like(p), lam)


def quantum_relative_entropy(rho, sigma) -> float:
    """Umegaki relative entropy ``S(rho||sigma)`` from spectra and overlaps."""
    rho, sigma = as_density(rho), as_density(sigma)
    w = np.abs(overlaps(rho, sigma)) ** 2
    p = rho.eigenvalues[:, None]
    q = sigma.eigenvalues[None, :]
    live = (p > 0) & (w > 0)
    if np.any(live & (q <= 0) & (w > OVERLAP_CUTOFF)):
        return math.inf
    live &= q > 0
    pp, qq = np.broadcast_to(p, w.shape)[live], np.broadcast_to(q, w.shape)[live]
    return float(np.sum(pp * w[live] * (np.log(pp) - np.log(qq))))


def quantum_chi2_lambda(rho, sigma, lam: float) -> float:
    """Spectral-sum form of the quantum chi^2_lambda divergence."""
    lam = _check_lambda(lam)
    rho, sigma = as_density(rho), as_density(sigma)
    w = np.abs(overlaps(rho, sigma)) ** 2
    p = np.broadcast_to(rho.eigenvalues[:, None], w.shape)
    q = np.broadcast_to(sigma.eigenvalues[None, :], w.shape)
    return chi2_lambda_sum(p.ravel(), q.ravel(), w.ravel(), lam)


def triangular_discrimination(rho, sigma) -> float:
    """``(1/2) sum (p_i - q_j)^2/(p_i + q_j) |<p_i|q_j>|^2``, the lambda = 1/2 member."""
    return quantum_chi2_lambda(rho, sigma, 0.5)


def _purification(state) -> np.ndarray:
    # sum_i sqrt(p_i) |v_i> (x) |v_i>
    v = state.eigenvectors
    return np.einsum("ai,bi,i->ab", v, v, np.sqrt(state.eigenvalues)).ravel()


def omega_lambda(rho, sigma, lam: float) -> np.ndarray:
    """``lam^2 [rho(x)I - I(x)sigma] [(1-lam) rho(x)I + lam I(x)sigma]^+`` on C^n (x) C^n."""
    lam = _check_lambda(lam)
    rho, sigma = as_density(rho), as_density(sigma)
    n = check_same_dim(rho, sigma)
    eye = np.eye(n)
    r1, s1 = np.kron(rho.matrix, eye), np.kron(eye, sigma.matrix)
    mix = (1.0 - lam) * r1 + lam * s1
    return lam**2 * (r1 - s1) @ np.linalg.pinv(mix, rcond=PINV_RCOND, hermitian=True)


def chi2_lambda_operator_route(rho, sigma, lam: float) -> float:
    """chi^2_lambda as ``<Psi_rho|Omega|Psi_rho> - <Psi_sigma|Omega|Psi_sigma>``.

    Builds the dim**2 operator explicitly; intended for dim <= 8.
    """
    rho, sigma = as_density(rho), as_density(sigma)
    omega = omega_lambda(rho, sigma, lam)
    psi_r, psi_s = _purification(rho), _purification(sigma)
    val = np.vdot(psi_r, omega @ psi_r) - np.vdot(psi_s, omega @ psi_s)
    return float(val.real)


def quantum_fisher_information(rho, h) -> float:
    """``2 sum (p_i - p_j)^2/(p_i + p_j) |<p_i|H|p_j>|^2`` (SLD Fisher information)."""
    rho, h = as_density(rho), as_observable(h)
    check_same_dim(rho, h)
    v = rho.eigenvectors
    hw = np.abs(v.conj().T @ h.matrix @ v) ** 2
    p = rho.eigenvalues
    s = p[:, None] + p[None, :]
    d = (p[:, None] - p[None, :]) ** 2
    ok = s >= DENOMINATOR_CUTOFF
    return float(2.0 * np.sum(d[ok] / s[ok] * hw[ok]))


@lru_cache(maxsize=8)
def _leggauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def composite_gauss_legendre(f: Callable[[np.ndarray], np.ndarray], panels, n: int = QUAD_NODES) -> float:
    """Integrate a vectorized ``f`` with an ``n``-node GL rule on each panel.

    ``panels`` is either a number of equal panels on [0, 1] or an increasing
    array of panel edges.
    """
    x, w = _leggauss(n)
    edges = np.linspace(0.0, 1.0, panels + 1) if np.isscalar(panels) else np.asarray(panels, float)
    half = np.diff(edges)[:, None] / 2
    nodes = (edges[:-1, None] + half) + half * x[None, :]
    return float(np.sum(half * w[None, :] * f(nodes.ravel()).reshape(nodes.shape)))


def _split_panels(edges: np.ndarray) -> np.ndarray:
    mids = (edges[:-1] + edges[1:]) / 2
    out = np.empty(2 * len(edges) - 1)
    out[0::2], out[1::2] = edges, mids
    return out


def integrate_unit_interval(
    f: Callable[[np.ndarray], np.ndarray],
    n: int = QUAD_NODES,
    tol: float = QUAD_TOL,
    max_panels: int = QUAD_MAX_PANELS,
    edges=None,
) -> float:
    """Gauss-Legendre on [0, 1], doubling the node count until two estimates agree.

    Each doubling splits every panel in two, so the total number of nodes goes
    ``n, 2n, 4n, ...``. Convergence: ``|I_k - I_{k-1}| < tol * max(1, |I_k|)``.
    ``edges`` sets the starting panels (default: the single panel [0, 1]).
    """
    edges = np.array([0.0, 1.0]) if edges is None else np.asarray(edges, float)
    prev = composite_gauss_legendre(f, edges, n)
    while len(edges) - 1 < max_panels:
        edges = _split_panels(edges)
        cur = composite_gauss_legendre(f, edges, n)
        if abs(cur - prev) < tol * max(1.0, abs(cur)):
            return cur
        prev = cur
    return prev


def chi2_lambda_curve(p, q) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorized ``lam -> chi^2_lambda(P|Q) / lam`` for lam in (0, 1]."""
    p, q = np.asarray(p, float), np.asarray(q, float)
    keep = (p > 0) | (q > 0)
    p, q = p[keep], q[keep]
    d2 = (p - q) ** 2

    def g(lam: np.ndarray) -> np.ndarray:
        lam = np.asarray(lam, float)[:, None]
        den = (1.0 - lam) * p[None, :] + lam * q[None, :]
        safe = np.where(den >= DENOMINATOR_CUTOFF, den, np.inf)
        return (lam * d2[None, :] / safe).sum(axis=1)

    return g


def kl_integral_representation(p, q, n_quad: int = QUAD_NODES, tol: float = QUAD_TOL) -> float:
    """``D(P|Q)`` computed as ``int_0^1 chi^2_lambda(P|Q) dlambda / lambda``.

    Uses the substitution ``lambda = u^2`` before the Gauss-Legendre rule.

    Raises:
        DivergentIntegral: when ``D(P|Q)`` itself is infinite.
    """
    if math.isinf(classical_kl(p, q)):
        raise DivergentIntegral("P is not absolutely continuous w.r.t. Q; the integral diverges")
    g = chi2_lambda_curve(p, q)
    return integrate_unit_interval(lambda u: 2.0 * u * g(u * u), n=n_quad, tol=tol)
