"""Nussbaum-Szkola embedding of a state pair into classical distributions.

For ``rho = sum_i p_i |p_i><p_i|`` and ``sigma = sum_j q_j |q_j><q_j|`` the
embedding lives on index pairs ``(i, j)`` flattened as ``i * n + j``:

    P_ij = p_i |<p_i|q_j>|^2,   Q_ij = q_j |<p_i|q_j>|^2,
    Theta_ij = <p_i|theta|q_j> / <p_i|q_j>   (0 where the overlap vanishes).

Eigenvalues are in the ascending order returned by ``spectral_decompose``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .matrix_core import as_density, as_observable, check_same_dim

OVERLAP_CUTOFF = 1e-14
NORMALIZATION_TOL = 1e-10


def overlaps(rho, sigma) -> np.ndarray:
    """Matrix of eigenvector overlaps ``<p_i|q_j>``."""
    rho, sigma = as_density(rho), as_density(sigma)
    check_same_dim(rho, sigma)
    return rho.eigenvectors.conj().T @ sigma.eigenvectors


def ns_distributions(rho, sigma) -> tuple[np.ndarray, np.ndarray]:
    """Return the flattened NS distributions ``(P, Q)``, each of length n**2."""
    rho, sigma = as_density(rho), as_density(sigma)
    w = np.abs(overlaps(rho, sigma)) ** 2
    p = rho.eigenvalues[:, None] * w
    q = sigma.eigenvalues[None, :] * w
    return p.ravel(), q.ravel()


def ns_theta(rho, sigma, theta_hat) -> np.ndarray:
    """Complex NS random variable ``Theta`` (flattened, length n**2)."""
    rho, sigma, theta_hat = as_density(rho), as_density(sigma), as_observable(theta_hat)
    check_same_dim(rho, sigma, theta_hat)
    o = overlaps(rho, sigma)
    num = rho.eigenvectors.conj().T @ theta_hat.matrix @ sigma.eigenvectors
    keep = np.abs(o) ** 2 >= OVERLAP_CUTOFF
    out = np.zeros_like(num)
    out[keep] = num[keep] / o[keep]
    return out.ravel()


@dataclass(frozen=True)
class NSPair:
    """Classical image ``(P, Q, Theta)`` of a state pair and an observable."""

    dim: int
    p: np.ndarray
    q: np.ndarray
    theta: np.ndarray

    def flat_index(self, i: int, j: int) -> int:
        return i * self.dim + j

    def pair_index(self, k: int) -> tuple[int, int]:
        return divmod(k, self.dim)

    def mean(self, which: str = "p") -> complex:
        w = self.p if which == "p" else self.q
        return complex(np.sum(w * self.theta))

    def variance(self, which: str = "p") -> float:
        """Complex-variable variance ``<|Theta - <Theta>|^2>``."""
        w = self.p if which == "p" else self.q
        return float(np.sum(w * np.abs(self.theta - self.mean(which)) ** 2))

    def to_dict(self) -> dict:
        n = self.dim
        return {
            "dim": n,
            "index_pairs": [[k // n, k % n] for k in range(n * n)],
            "p": self.p.tolist(),
            "q": self.q.tolist(),
            "theta": [[float(z.real), float(z.imag)] for z in self.theta],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, d: dict) -> "NSPair":
        theta = np.array([complex(re, im) for re, im in d["theta"]])
        return cls(int(d["dim"]), np.asarray(d["p"], float), np.asarray(d["q"], float), theta)


def ns_pair(rho, sigma, theta_hat) -> NSPair:
    rho = as_density(rho)
    p, q = ns_distributions(rho, sigma)
    return NSPair(rho.dim, p, q, ns_theta(rho, sigma, theta_hat))


@dataclass(frozen=True)
class VarianceDomination:
    classical_p: float
    classical_q: float
    quantum_rho: float
    quantum_sigma: float

    @property
    def margins(self) -> tuple[float, float]:
        """Quantum minus classical variance under each state (should be >= 0)."""
        return self.quantum_rho - self.classical_p, self.quantum_sigma - self.classical_q

    def holds(self, tol: float = 1e-9) -> bool:
        return min(self.margins) >= -tol


def variance_domination_check(pair: NSPair, rho, sigma, theta_hat) -> VarianceDomination:
    rho, sigma = as_density(rho), as_density(sigma)
    return VarianceDomination(
        classical_p=pair.variance("p"),
        classical_q=pair.variance("q"),
        quantum_rho=rho.variance(theta_hat),
        quantum_sigma=sigma.variance(theta_hat),
    )


def is_distribution(w, tol: float = NORMALIZATION_TOL) -> bool:
    w = np.asarray(w, dtype=float)
    return bool(np.all(w >= 0) and abs(w.sum() - 1.0) <= tol)
