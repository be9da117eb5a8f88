"""Petz recoverability on finite-dimensional tracial matrix algebras."""

from .algebra import (
    ReferenceDensity,
    TracialMatrixAlgebra,
    hs_inner,
    matrix_function,
    random_reference,
    random_state,
    schatten_p_norm,
    tau,
    weighted_inner,
    weighted_p_norm,
)
from .channels import Superoperator, choi_matrix, from_kraus, pinching
from .entropy import dpi_gap, fidelity, recoverability_bound, sandwiched_entropy
from .petz import decompose, fixed_point_analysis, iterate, l1_norm_probe, petz_map

__version__ = "0.1.0"
