"""Spearman's rho, Kendall's tau and the upper-tail profile.

Closed forms use the family moments ``mu`` and ``theta``; the ``*_quadrature``
variants integrate the CDF directly and work for any object exposing
``cdf`` (and ``density`` for tau), including reference copulas.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .copula import CopulaModel
from .errors import InvalidArgumentError
from .numerics import QuadratureRule, evaluate_on_grid, rule_for


def spearman_rho(model: CopulaModel) -> float:
    """``12 mu^T A mu - 3``."""
    mu = model.family.mu
    return float(12.0 * mu @ model.matrix @ mu - 3.0)


def kendall_tau(model: CopulaModel) -> float:
    """``1 - 4 tr(A^T Theta A Theta)``."""
    a, th = model.matrix, model.family.theta
    return float(1.0 - 4.0 * np.trace(a.T @ th @ a @ th))


def spearman_rho_quadrature(copula, rule: QuadratureRule | None = None) -> float:
    """``12 * int int C(u, v) du dv - 3`` by tensor quadrature."""
    if rule is None:
        rule = rule_for(copula)
    values = evaluate_on_grid(copula.cdf, rule.nodes, rule.nodes)
    return float(12.0 * (rule.weights @ values @ rule.weights) - 3.0)


def kendall_tau_quadrature(copula, rule: QuadratureRule | None = None) -> float:
    """``4 * int int C(u, v) c(u, v) du dv - 1`` by tensor quadrature."""
    if rule is None:
        rule = rule_for(copula)
    values = evaluate_on_grid(lambda u, v: copula.cdf(u, v) * copula.density(u, v), rule.nodes, rule.nodes)
    return float(4.0 * (rule.weights @ values @ rule.weights) - 1.0)


def upper_tail_profile(model: CopulaModel, u_points: Sequence[float]) -> list[float]:
    """``(1 - 2u + C(u, u)) / (1 - u)`` at each point, whose limit at 1 is the tail coefficient.

    The numerator is the survival copula on the diagonal, evaluated from the
    upper integrals of the family so that it stays accurate as u approaches 1.
    """
    u = np.asarray(u_points, dtype=float)
    if np.any(u >= 1.0) or np.any(u < 0.0):
        raise InvalidArgumentError("tail profile points must lie in [0, 1)")
    return [float(x) for x in model.survival(u, u) / (1.0 - u)]


def default_tail_points(kmax: int = 6) -> list[float]:
    return [1.0 - 10.0 ** -k for k in range(2, kmax + 1)]


def measures_report(model: CopulaModel, tail_points: Sequence[float] | None = None) -> dict:
    """JSON-ready summary of every dependence measure of ``model``."""
    if tail_points is None:
        tail_points = default_tail_points()
    return {
        "rho_closed": spearman_rho(model),
        "rho_quadrature": spearman_rho_quadrature(model),
        "tau_closed": kendall_tau(model),
        "tau_quadrature": kendall_tau_quadrature(model),
        "tail_profile": [{"u": float(u), "value": val} for u, val in zip(tail_points, upper_tail_profile(model, tail_points))],
    }
