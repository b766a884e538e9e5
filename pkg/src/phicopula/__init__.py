"""Copulas with density ``phi(u)^T A phi(v)`` for an orthonormal family ``phi``."""

from .basis import OrthonormalFamily, make_fgm_family, make_haar_family, make_trig_family, orthonormalize
from .copula import CopulaModel, cesaro_aggregate, diagonal_model, independence_model, mix, new_model, star, validate
from .dependence import kendall_tau, spearman_rho, upper_tail_profile
from .montecarlo import estimate, sample
from .partition import discretize_copula, make_partition, to_copula_model
from .projection import convergence_study, p_phi, t_phi
from .reference import make_reference

__version__ = "0.1.0"

__all__ = [
    "CopulaModel",
    "OrthonormalFamily",
    "cesaro_aggregate",
    "convergence_study",
    "diagonal_model",
    "discretize_copula",
    "estimate",
    "independence_model",
    "kendall_tau",
    "make_fgm_family",
    "make_haar_family",
    "make_partition",
    "make_reference",
    "make_trig_family",
    "mix",
    "new_model",
    "orthonormalize",
    "p_phi",
    "sample",
    "spearman_rho",
    "star",
    "t_phi",
    "to_copula_model",
    "upper_tail_profile",
    "validate",
]
