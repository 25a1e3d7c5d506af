"""Mean/variance lower bounds on chi^2_lambda and on relative entropy.

Notation used throughout: for an observable ``theta`` and states ``rho`` and
``sigma``,

    a = <theta>_rho - <theta>_sigma,  y = Var_rho(theta),  z = Var_sigma(theta).

``f_lambda(a, y, z) = lam a^2 / ((1-lam) y + lam z + (1-lam) lam a^2)`` and
``F(a, y, z)`` is its integral over lambda in [0, 1].
"""

from __future__ import annotations

import math
import sys
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

from .divergences import (
    classical_chi2_lambda,
    integrate_unit_interval,
    quantum_chi2_lambda,
    quantum_relative_entropy,
    triangular_discrimination,
)
from .errors import DegenerateMeans, InvalidMoments, NonPositiveArgument, ZeroVariance
from .matrix_core import as_density, as_observable, check_same_dim
from .ns_map import ns_pair

A_CUTOFF = 1e-12
MOMENT_CLAMP = 1e-12
RS_TOL = 1e-9
CHI2_TOL = 1e-9
ENTROPY_TOL = 1e-8
TRIANGULAR_TOL = 1e-9
TRIANGULAR_MIN_GAP = 1e-9
HCR_TOL = 1e-9
ZERO_VARIANCE = 1e-15
EXCHANGE_RTOL = 1e-9


@dataclass(frozen=True)
class MomentSummary:
    """Mean difference and the two variances entering every bound."""

    a: float
    y: float
    z: float

    def __post_init__(self):
        for name in ("y", "z"):
            v = getattr(self, name)
            if v < -MOMENT_CLAMP:
                raise InvalidMoments(f"variance {name}={v!r} is negative")
            if v < 0:
                object.__setattr__(self, name, 0.0)

    @classmethod
    def from_states(cls, rho, sigma, theta_hat) -> "MomentSummary":
        rho, sigma, theta_hat = as_density(rho), as_density(sigma), as_observable(theta_hat)
        check_same_dim(rho, sigma, theta_hat)
        return cls(
            rho.expectation(theta_hat) - sigma.expectation(theta_hat),
            rho.variance(theta_hat),
            sigma.variance(theta_hat),
        )

    @classmethod
    def from_distributions(cls, p, q, values) -> "MomentSummary":
        """Moments of a real random variable under two distributions."""
        p, q, x = (np.asarray(v, float) for v in (p, q, values))
        mp, mq = float(p @ x), float(q @ x)
        return cls(mp - mq, float(p @ (x - mp) ** 2), float(q @ (x - mq) ** 2))


def f_lambda(x: float, y: float, z: float, lam: float) -> float:
    num = lam * x * x
    if num == 0.0:
        return 0.0
    den = (1.0 - lam) * y + lam * z + (1.0 - lam) * lam * x * x
    return math.inf if den <= 0.0 else num / den


def _log_ratio(num: float, den: float, diff: float) -> float:
    # ln(num/den) where diff = num - den is known exactly
    t = diff / den
    if abs(t) < 0.5:
        return math.log1p(t)
    ratio = num / den
    # subnormal num can underflow the ratio
    return math.log(ratio) if sys.float_info.min <= ratio < math.inf else math.log(num) - math.log(den)


def _split_pair(d: float, c: float, product: float) -> tuple[float, float]:
    # (d + c, d - c) given their product, avoiding cancellation in the small one
    if c >= 0:
        big = d + c
        return big, (product / big if big > 0 else 0.0)
    big = d - c
    return (product / big if big > 0 else 0.0), big


def F_closed_form(a, y: float | None = None, z: float | None = None) -> float:
    """``F(a, y, z) = int_0^1 f_lambda(a, y, z) dlambda`` in closed form.

    Evaluates the binary relative entropy ``r ln(r/s) + (1-r) ln((1-r)/(1-s))``
    with ``b = a^2 + z - y``, ``v = sqrt(y + b^2/(4a^2))``,
    ``r = 1/2 + b/(4|a|v)``, ``s = r - |a|/(2v)``. Internally the four
    numerators of ``r, 1-r, s, 1-s`` (over ``2D``, ``D = 2|a|v``) are formed
    from products so that no difference of nearly equal numbers is taken.

    Accepts either a ``MomentSummary`` or the three numbers. Returns
    ``math.inf`` when ``z == 0`` and ``a != 0``.
    """
    m = a if isinstance(a, MomentSummary) else MomentSummary(float(a), float(y), float(z))
    x = abs(m.a)
    if x < A_CUTOFF:
        return 0.0
    # F is invariant under (a, y, z) -> (k a, k^2 y, k^2 z); rescale against overflow
    scale = max(x, math.sqrt(m.y), math.sqrt(m.z))
    x, y, z = x / scale, m.y / scale / scale, m.z / scale / scale
    a2 = x * x
    if a2 == 0.0:
        # a^2 is below the smallest double relative to the variances
        return 0.0
    b = a2 + z - y
    c = b - 2.0 * a2
    d = math.sqrt(b * b + 4.0 * a2 * y)
    r_num, r_bar = _split_pair(d, b, 4.0 * a2 * y)
    s_num, s_bar = _split_pair(d, c, 4.0 * a2 * z)
    two_d = 2.0 * d
    r, s = r_num / two_d, s_num / two_d
    if not (-RS_TOL <= r <= 1 + RS_TOL and -RS_TOL <= s <= 1 + RS_TOL):
        raise InvalidMoments(f"r={r!r}, s={s!r} outside [0, 1] for {m}")
    total = 0.0
    if r_num > 0:
        if s_num <= 0:
            return math.inf
        total += (r_num / two_d) * _log_ratio(r_num, s_num, 2.0 * a2)
    if r_bar > 0:
        if s_bar <= 0:
            return math.inf
        total += (r_bar / two_d) * _log_ratio(r_bar, s_bar, -2.0 * a2)
    return max(total, 0.0)


def F_integral(a: float, y: float, z: float) -> float:
    """``F`` by Gauss-Legendre quadrature of ``f_lambda`` (slow path).

    The integrand has boundary layers of width about ``y/(z+a^2)`` at 0 and
    ``z/(y+a^2)`` at 1, so the starting panels are graded geometrically
    toward both ends.
    """
    x2 = float(a) ** 2
    y, z = float(y), float(z)

    def f(lam: np.ndarray) -> np.ndarray:
        return lam * x2 / ((1.0 - lam) * y + lam * z + (1.0 - lam) * lam * x2)

    total = y + z + x2
    if x2 == 0.0:
        return 0.0
    width = max(1e-2 * min(y, z) / total, 1e-15)
    side = np.geomspace(width, 0.5, max(2, int(np.ceil(np.log2(0.5 / width))) + 1))
    edges = np.concatenate([[0.0], side[:-1], [0.5], 1.0 - side[-2::-1], [1.0]])
    return integrate_unit_interval(f, tol=1e-12, edges=edges)


@dataclass
class BoundReport:
    """Outcome of checking ``divergence >= lower_bound``."""

    divergence: float
    lower_bound: float
    slack: float
    satisfied: bool
    tolerance: float
    context: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def make_report(divergence: float, bound: float, atol: float, rtol: float = 0.0, **context) -> BoundReport:
    """Build a report; violations beyond ``atol + rtol*|bound|`` are unsatisfied."""
    divergence, bound = float(divergence), float(bound)
    if math.isinf(divergence) and divergence > 0:
        slack, ok = math.inf, True
    elif math.isinf(bound):
        slack, ok = -math.inf, False
    else:
        slack = divergence - bound
        ok = slack >= -(atol + rtol * abs(bound))
    return BoundReport(divergence, bound, slack, ok, atol, dict(context))


def hcr_bound(p, q, theta) -> tuple[float, float]:
    """Hammersley-Chapman-Robbins bound for a complex random variable.

    Returns ``(chi2(P|Q), |<Theta>_P - <Theta>_Q|^2 / Var_Q(Theta))``.
    When Q does not dominate P the chi-squared side is infinite and the bound
    is reported as-is (trivially satisfied).

    Raises:
        ZeroVariance: Q dominates P, ``Var_Q(Theta) < 1e-15`` and yet the means differ.
    """
    p, q = np.asarray(p, float), np.asarray(q, float)
    t = np.asarray(theta, complex)
    chi2 = classical_chi2_lambda(p, q, 1.0)
    mp, mq = np.sum(p * t), np.sum(q * t)
    gap = abs(mp - mq) ** 2
    var_q = float(np.sum(q * np.abs(t - mq) ** 2))
    if var_q < ZERO_VARIANCE:
        if gap <= ZERO_VARIANCE:
            return chi2, 0.0
        if math.isinf(chi2):
            return chi2, math.inf
        raise ZeroVariance(f"Var_Q(Theta)={var_q:.3e} but means differ by {math.sqrt(gap):.3e}")
    return chi2, float(gap / var_q)


@dataclass(frozen=True)
class Chi2Chain:
    """The three quantities of ``chi2(NS) >= lam f(NS moments) >= lam f(quantum moments)``."""

    chi2_quantum: float
    chi2_ns: float
    bound_ns: float
    bound_quantum: float

    def holds(self, tol: float = CHI2_TOL) -> bool:
        return (
            abs(self.chi2_quantum - self.chi2_ns) <= tol * max(1.0, self.chi2_ns)
            and self.chi2_ns >= self.bound_ns - tol
            and self.bound_ns >= self.bound_quantum - tol
        )


def chi2_chain(rho, sigma, theta_hat, lam: float) -> Chi2Chain:
    pair = ns_pair(rho, sigma, theta_hat)
    gap = abs(pair.mean("p") - pair.mean("q"))
    m = MomentSummary.from_states(rho, sigma, theta_hat)
    return Chi2Chain(
        chi2_quantum=quantum_chi2_lambda(rho, sigma, lam),
        chi2_ns=classical_chi2_lambda(pair.p, pair.q, lam),
        bound_ns=lam * f_lambda(gap, pair.variance("p"), pair.variance("q"), lam),
        bound_quantum=lam * f_lambda(m.a, m.y, m.z, lam),
    )


def chi2_lambda_tur_check(rho, sigma, theta_hat, lam: float, tol: float = CHI2_TOL) -> BoundReport:
    """``chi^2_lambda[rho, sigma] >= lam * f_lambda(a, y, z)``."""
    m = MomentSummary.from_states(rho, sigma, theta_hat)
    return make_report(
        quantum_chi2_lambda(rho, sigma, lam),
        lam * f_lambda(m.a, m.y, m.z, lam),
        tol,
        check="chi2_tur",
        lam=float(lam),
        a=m.a,
        y=m.y,
        z=m.z,
    )


def entropy_tur_check(rho, sigma, theta_hat, tol: float = ENTROPY_TOL) -> BoundReport:
    """``S(rho||sigma) >= F(a, y, z)``; infinite relative entropy passes trivially."""
    m = MomentSummary.from_states(rho, sigma, theta_hat)
    return make_report(
        quantum_relative_entropy(rho, sigma), F_closed_form(m), tol, check="entropy_tur", a=m.a, y=m.y, z=m.z
    )


def triangular_tur_check(rho, sigma, theta_hat, tol: float = TRIANGULAR_TOL) -> BoundReport:
    """``(y + z) / (a^2/2) >= (1 - delta)/delta`` for the triangular discrimination delta.

    Raises:
        DegenerateMeans: ``|a| <= 1e-9``.
    """
    m = MomentSummary.from_states(rho, sigma, theta_hat)
    if abs(m.a) <= TRIANGULAR_MIN_GAP:
        raise DegenerateMeans(f"mean difference {m.a!r} too small for the triangular relation")
    delta = triangular_discrimination(rho, sigma)
    lhs = (m.y + m.z) / (0.5 * m.a * m.a)
    rhs = (1.0 - delta) / delta if delta > 0 else math.inf
    return make_report(lhs, rhs, tol, check="triangular_tur", delta=delta, a=m.a, y=m.y, z=m.z)


def exchange_h(x: float) -> float:
    return x * math.tanh(x / 2.0)


def exchange_tur_g(x: float) -> float:
    """Inverse of ``h(x) = x tanh(x/2)`` on the positive half-line, by bisection."""
    if not x > 0:
        raise NonPositiveArgument(f"g is defined for x > 0, got {x!r}")
    lo, hi = 0.0, max(1.0, x)
    while exchange_h(hi) < x:
        hi *= 2.0
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if exchange_h(mid) < x:
            lo = mid
        else:
            hi = mid
    return lo if abs(exchange_h(lo) - x) <= abs(exchange_h(hi) - x) else hi


def exchange_tur_check(p, theta, involution=None, rtol: float = EXCHANGE_RTOL) -> BoundReport:
    """Exchange-fluctuation TUR ``Var(theta)/<theta>^2 >= sinh(g(Sigma)/2)^-2``.

    ``p`` is the common forward/backward trajectory distribution and
    ``involution[k]`` the index of the conjugate trajectory (default: reversal).
    """
    p, th = np.asarray(p, float), np.asarray(theta, float)
    perm = np.arange(len(p))[::-1] if involution is None else np.asarray(involution, int)
    q = p[perm]
    on = p > 0
    if np.any(on & (q <= 0)):
        sigma_cl = math.inf
    else:
        sigma_cl = float(np.sum(p[on] * np.log(p[on] / q[on])))
    mean = float(p @ th)
    var = float(p @ (th - mean) ** 2)
    lhs = var / mean**2 if mean != 0 else math.inf
    if math.isinf(sigma_cl):
        rhs = 0.0
    elif sigma_cl <= 0:
        rhs = math.inf
    else:
        rhs = math.sinh(exchange_tur_g(sigma_cl) / 2.0) ** -2
    return make_report(lhs, rhs, 0.0, rtol=rtol, check="exchange_tur", entropy_production=sigma_cl, mean=mean, var=var)
