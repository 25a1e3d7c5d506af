"""Dense linear algebra for finite-dimensional quantum states.

Index convention for bipartite operators: the system index is major and the
environment index is minor, i.e. basis state ``|s, e>`` sits at flat position
``s * d_E + e``. ``partial_trace`` and ``tensor_product`` rely on it.
"""

from __future__ import annotations

from typing import Literal

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidRank,
    InvalidState,
    NotHermitian,
    NotUnitary,
    SingularState,
)

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
NEGATIVE_EIG_TOL = 1e-10
# eigenvalues with magnitude below this are LAPACK noise on a rank-deficient state
ZERO_EIG_TOL = 1e-13
ORTHONORMAL_TOL = 1e-8
UNITARY_TOL = 1e-9
LOG_RANK_TOL = 1e-12

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)

Subsystem = Literal["S", "E"]


def _as_square(m, name: str = "matrix") -> np.ndarray:
    arr = np.array(m, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise DimensionMismatch(f"{name} must be a non-empty square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidState(f"{name} has non-finite entries")
    return arr


def _hermitian_defect(m: np.ndarray) -> float:
    return float(np.max(np.abs(m - m.conj().T)))


def spectral_decompose(m, atol: float = HERMITIAN_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix.

    Returns:
        ``(eigenvalues, eigenvectors)`` with eigenvalues ascending and the
        eigenvectors as the *columns* of the second array.

    Raises:
        NotHermitian: if ``max|m - m^dagger| > atol``.
    """
    m = _as_square(m)
    if _hermitian_defect(m) > atol:
        raise NotHermitian(f"Hermiticity defect {_hermitian_defect(m):.3e} exceeds {atol:.1e}")
    vals, vecs = np.linalg.eigh((m + m.conj().T) / 2)
    return vals, vecs


class DensityMatrix:
    """Validated quantum state with a cached spectral decomposition.

    The spectrum is cleaned once at construction: eigenvalues in
    ``[-1e-10, 1e-13]`` are set to exactly zero so that support decisions in the
    divergences do not depend on floating-point residue. More negative
    eigenvalues reject the input.
    """

    __slots__ = ("matrix", "eigenvalues", "eigenvectors")

    def __init__(self, matrix):
        m = _as_square(matrix, "density matrix")
        if _hermitian_defect(m) > HERMITIAN_TOL:
            raise NotHermitian(f"density matrix is not Hermitian (defect {_hermitian_defect(m):.3e})")
        m = (m + m.conj().T) / 2
        tr = np.trace(m).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise InvalidState(f"trace is {tr!r}, expected 1")
        vals, vecs = np.linalg.eigh(m)
        if vals[0] < -NEGATIVE_EIG_TOL:
            raise InvalidState(f"negative eigenvalue {vals[0]:.3e}")
        vals = np.where(vals < ZERO_EIG_TOL, 0.0, vals)
        for arr in (m, vals, vecs):
            arr.setflags(write=False)
        self.matrix = m
        self.eigenvalues = vals
        self.eigenvectors = vecs

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def rank(self) -> int:
        return int(np.count_nonzero(self.eigenvalues))

    @property
    def spectrum(self) -> list[tuple[float, np.ndarray]]:
        return [(float(p), self.eigenvectors[:, i]) for i, p in enumerate(self.eigenvalues)]

    def expectation(self, op) -> float:
        return float(np.real(np.trace(self.matrix @ _matrix_of(op))))

    def variance(self, op) -> float:
        """Centered variance ``tr(rho (A - <A>)^2)``; never negative."""
        a = _matrix_of(op)
        centered = a - self.expectation(a) * np.eye(self.dim)
        return max(float(np.real(np.trace(self.matrix @ centered @ centered))), 0.0)

    def __repr__(self) -> str:
        return f"DensityMatrix(dim={self.dim}, rank={self.rank})"


class Observable:
    """Hermitian operator such as an estimator or a Hamiltonian."""

    __slots__ = ("matrix",)

    def __init__(self, matrix):
        m = _as_square(matrix, "observable")
        if _hermitian_defect(m) > HERMITIAN_TOL:
            raise NotHermitian(f"observable is not Hermitian (defect {_hermitian_defect(m):.3e})")
        m = (m + m.conj().T) / 2
        m.setflags(write=False)
        self.matrix = m

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __repr__(self) -> str:
        return f"Observable(dim={self.dim})"


class Unitary:
    __slots__ = ("matrix",)

    def __init__(self, matrix):
        m = _as_square(matrix, "unitary")
        defect = float(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))))
        if defect > UNITARY_TOL:
            raise NotUnitary(f"U^dagger U deviates from identity by {defect:.3e}")
        m.setflags(write=False)
        self.matrix = m

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __repr__(self) -> str:
        return f"Unitary(dim={self.dim})"


def _matrix_of(x) -> np.ndarray:
    if isinstance(x, (DensityMatrix, Observable, Unitary)):
        return x.matrix
    return np.asarray(x, dtype=complex)


def as_density(x) -> DensityMatrix:
    return x if isinstance(x, DensityMatrix) else DensityMatrix(x)


def as_observable(x) -> Observable:
    return x if isinstance(x, Observable) else Observable(x)


def as_unitary(x) -> Unitary:
    return x if isinstance(x, Unitary) else Unitary(x)


def check_same_dim(*objs) -> int:
    dims = {_matrix_of(o).shape[0] for o in objs}
    if len(dims) != 1:
        raise DimensionMismatch(f"operands have mismatched dimensions {sorted(dims)}")
    return dims.pop()


def tensor_product(a, b) -> np.ndarray:
    """Kronecker product, first factor major."""
    return np.kron(_matrix_of(a), _matrix_of(b))


def partial_trace(m, subsystem: Subsystem, dims: tuple[int, int]) -> np.ndarray:
    """Trace out ``subsystem`` ("S" or "E") of an operator on S (x) E.

    Returns the reduced operator on the *other* subsystem.
    """
    arr = _matrix_of(m)
    d_s, d_e = dims
    if arr.shape != (d_s * d_e, d_s * d_e):
        raise DimensionMismatch(f"operator of shape {arr.shape} does not act on {d_s}x{d_e}")
    t = arr.reshape(d_s, d_e, d_s, d_e)
    if subsystem == "E":
        return np.einsum("iaja->ij", t)
    if subsystem == "S":
        return np.einsum("aiaj->ij", t)
    raise ValueError(f"subsystem must be 'S' or 'E', got {subsystem!r}")


def evolve(rho, u) -> DensityMatrix:
    """``U rho U^dagger`` as a revalidated state."""
    rho, u = as_density(rho), as_unitary(u)
    check_same_dim(rho, u)
    out = u.matrix @ rho.matrix @ u.matrix.conj().T
    return DensityMatrix((out + out.conj().T) / 2)


def matrix_log_psd(rho, support_only: bool = False) -> np.ndarray:
    """Matrix logarithm of a positive semidefinite state.

    With ``support_only`` the log is taken on the support and the kernel is
    mapped to zero, which is what ``tr(rho ln sigma)`` needs when
    ``supp(rho) <= supp(sigma)``.

    Raises:
        SingularState: full-rank variant called on a state with an eigenvalue
            at or below 1e-12.
    """
    rho = as_density(rho)
    p, v = rho.eigenvalues, rho.eigenvectors
    on_support = p > LOG_RANK_TOL
    if not support_only and not np.all(on_support):
        raise SingularState(f"state has eigenvalue {p.min():.3e}; logarithm undefined")
    logs = np.zeros_like(p)
    logs[on_support] = np.log(p[on_support])
    return (v * logs) @ v.conj().T


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def random_density_matrix(dim: int, rank: int | None = None, rng_seed=None) -> DensityMatrix:
    """Normalized ``G G^dagger`` with ``G`` a ``dim x rank`` complex Gaussian matrix."""
    rank = dim if rank is None else rank
    if not 1 <= rank <= dim:
        raise InvalidRank(f"rank must lie in [1, {dim}], got {rank}")
    rng = _rng(rng_seed)
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    m = g @ g.conj().T
    m /= np.trace(m).real
    return DensityMatrix((m + m.conj().T) / 2)


def random_observable(dim: int, scale: float = 1.0, rng_seed=None) -> Observable:
    rng = _rng(rng_seed)
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return Observable(scale * (g + g.conj().T) / 2)


def random_unitary(dim: int, rng_seed=None) -> Unitary:
    """Haar-distributed unitary via QR with the diagonal phases of R fixed."""
    rng = _rng(rng_seed)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    q = q * (d / np.abs(d))
    return Unitary(q)


def pure_state(vector) -> DensityMatrix:
    v = np.asarray(vector, dtype=complex)
    v = v / np.linalg.norm(v)
    return DensityMatrix(np.outer(v, v.conj()))


def swap_operator(d: int) -> np.ndarray:
    """SWAP on C^d (x) C^d."""
    s = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            s[j * d + i, i * d + j] = 1.0
    return s
