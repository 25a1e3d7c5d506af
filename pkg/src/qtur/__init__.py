"""Uncertainty relations for quantum entropy production.

Finite-dimensional toolkit for the generalized chi^2_lambda divergence, the
Nussbaum-Szkola embedding, and mean/variance lower bounds on relative entropy.
"""

from .bounds import (
    BoundReport,
    F_closed_form,
    MomentSummary,
    chi2_lambda_tur_check,
    entropy_tur_check,
    exchange_tur_g,
    f_lambda,
    hcr_bound,
    triangular_tur_check,
)
from .divergences import (
    chi2_lambda_operator_route,
    classical_chi2_lambda,
    classical_kl,
    kl_integral_representation,
    quantum_chi2_lambda,
    quantum_fisher_information,
    quantum_relative_entropy,
    triangular_discrimination,
)
from .matrix_core import (
    DensityMatrix,
    Observable,
    Unitary,
    evolve,
    partial_trace,
    random_density_matrix,
    random_observable,
    random_unitary,
    spectral_decompose,
    tensor_product,
)
from .ns_map import NSPair, ns_distributions, ns_pair, ns_theta

__version__ = "0.1.0"
