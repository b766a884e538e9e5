"""Projection of arbitrary copula densities onto a family.

``t_phi(c) = int int c(x, y) phi(x) phi(y)^T dx dy`` is the matrix of L2
coefficients of ``c`` on the tensor basis; ``p_phi(c)`` is the model built from
it. The model is a genuine copula density whenever the identity matrix is
admissible for the family (see :func:`identity_check`).
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .basis import OrthonormalFamily
from .copula import CopulaModel, ValidationReport, new_model, validate, VALID
from .dependence import spearman_rho, spearman_rho_quadrature
from .errors import InvalidArgumentError, NotSquareIntegrableError, NumericError
from .numerics import (
    GRADED_PANEL_ORDER,
    QuadratureRule,
    composite_rule,
    default_order,
    graded_edges,
)

log = logging.getLogger(__name__)

CONVERGENCE_TOL = 1e-9
MAX_DOUBLINGS = 3
PROJECTION_ATOL = 1e-8
_ROW_BLOCK = 256


def density_of(target) -> Callable:
    """Vectorised density callable of a model, reference copula or plain function."""
    if hasattr(target, "density"):
        return target.density
    if callable(target):
        return target
    raise InvalidArgumentError(f"cannot take a density from {target!r}")


def projection_rule(target, family: OrthonormalFamily, order: int | None = None) -> QuadratureRule:
    """Composite rule honouring the family's and target's breakpoints and corner singularities."""
    grading = int(getattr(target, "corner_grading", 0))
    breakpoints = set(family.breakpoints) | set(getattr(target, "breakpoints", ()))
    if isinstance(target, CopulaModel):
        breakpoints |= set(target.family.breakpoints)
    if order is None:
        order = GRADED_PANEL_ORDER if grading else default_order()
        if family.degree is not None and not grading:
            order = max(order, family.degree + 1)
    return composite_rule(graded_edges(sorted(breakpoints), grading), order)


def _weighted_moments(density: Callable, family: OrthonormalFamily, rule: QuadratureRule) -> np.ndarray:
    x, w = rule.nodes, rule.weights
    f = family.phi(x)
    fw = f * w[:, None]
    out = np.zeros((family.size, family.size))
    # fixed row blocks keep memory bounded and the summation order deterministic
    for start in range(0, x.size, _ROW_BLOCK):
        xs = x[start:start + _ROW_BLOCK]
        U, V = np.meshgrid(xs, x, indexing="ij")
        c = np.asarray(density(U, V), dtype=float)
        bad = ~np.isfinite(c)
        if bad.any():
            i, j = np.argwhere(bad)[0]
            loc = (float(xs[i]), float(x[j]))
            raise NumericError(f"target density is not finite at (u, v)={loc}", location=loc)
        out += fw[start:start + _ROW_BLOCK].T @ c @ fw
    return out


def t_phi(target, family: OrthonormalFamily, rule: QuadratureRule | None = None,
          tol: float = CONVERGENCE_TOL, max_doublings: int = MAX_DOUBLINGS) -> np.ndarray:
    """Coefficient matrix ``int int c(x, y) phi(x) phi(y)^T``.

    With an explicit ``rule`` a single quadrature is done. Otherwise the
    per-panel order is doubled until the matrix moves by less than ``tol``
    (Frobenius), at most ``max_doublings`` times.
    """
    density = density_of(target)
    if rule is not None:
        return _weighted_moments(density, family, rule)
    r = projection_rule(target, family)
    current = _weighted_moments(density, family, r)
    order = r.order
    for _ in range(max_doublings):
        order *= 2
        finer = _weighted_moments(density, family, projection_rule(target, family, order))
        change = float(np.linalg.norm(finer - current))
        current = finer
        if change < tol:
            break
    else:
        log.warning("t_phi: quadrature did not settle below %.1e (last change %.3g)", tol, change)
    return current


def p_phi(target, family: OrthonormalFamily, rule: QuadratureRule | None = None,
          resolution: int = 512) -> tuple[CopulaModel, ValidationReport]:
    """Projected model and its validation report.

    The candidate is returned even when it is not a copula density.
    """
    matrix = t_phi(target, family, rule)
    model = new_model(family, matrix, atol=PROJECTION_ATOL)
    report = validate(model, resolution=resolution)
    return model.with_validation(report), report


def identity_check(family: OrthonormalFamily, resolution: int = 512) -> bool:
    """Whether ``phi(u)^T phi(v)`` is nonnegative, i.e. the identity matrix is admissible."""
    model = new_model(family, np.eye(family.size))
    return validate(model, resolution=resolution).verdict == VALID


def inner_product(m1: CopulaModel, other, rule: QuadratureRule | None = None) -> float:
    """``int int c1(u, v) c2(v, u) du dv``.

    For two models of one family this is ``tr(A B)``; for a model against any
    other density it is ``tr(A t_phi(c2))``.
    """
    if isinstance(other, CopulaModel):
        if not m1.family.same_as(other.family):
            raise InvalidArgumentError(f"family mismatch: {m1.family.label} vs {other.family.label}")
        return float(np.trace(m1.matrix @ other.matrix))
    return float(np.trace(m1.matrix @ t_phi(other, m1.family, rule)))


def inner_product_quadrature(c1, c2, rule: QuadratureRule) -> float:
    """Direct quadrature of ``int int c1(u, v) c2(v, u)``."""
    d1, d2 = density_of(c1), density_of(c2)
    x, w = rule.nodes, rule.weights
    U, V = np.meshgrid(x, x, indexing="ij")
    return float(w @ (d1(U, V) * d2(V, U)) @ w)


def l2_distance(target, model: CopulaModel, rule: QuadratureRule | None = None) -> float:
    """``|| c - model ||`` in L2 of the unit square, by tensor quadrature."""
    density = density_of(target)
    if rule is None:
        rule = projection_rule(target, model.family)
    x, w = rule.nodes, rule.weights
    total = 0.0
    for start in range(0, x.size, _ROW_BLOCK):
        xs = x[start:start + _ROW_BLOCK]
        U, V = np.meshgrid(xs, x, indexing="ij")
        diff = np.asarray(density(U, V), float) - model.density_grid(xs, x)
        total += float(w[start:start + _ROW_BLOCK] @ diff**2 @ w)
    return float(np.sqrt(total))


# --------------------------------------------------------------------------
# square integrability
# --------------------------------------------------------------------------

_SHELL_LEVELS = (12, 24)


def _corner_shell(density: Callable, corner: tuple[int, int], k: int, rule: QuadratureRule) -> float:
    """``int c^2`` over the L-shaped shell between the boxes of side 2^-(k+1) and 2^-k at a corner."""
    big, small = 2.0 ** -k, 2.0 ** -(k + 1)
    total = 0.0
    # shell = [small, big] x [0, big]  union  [0, small] x [small, big], in corner-local coordinates
    for (a0, a1), (b0, b1) in (((small, big), (0.0, big)), ((0.0, small), (small, big))):
        s = a0 + (a1 - a0) * rule.nodes
        t = b0 + (b1 - b0) * rule.nodes
        S, T = np.meshgrid(s, t, indexing="ij")
        U = S if corner[0] == 0 else 1.0 - S
        V = T if corner[1] == 0 else 1.0 - T
        vals = np.asarray(density(U, V), float) ** 2
        total += (a1 - a0) * (b1 - b0) * float(rule.weights @ vals @ rule.weights)
    return total


def check_square_integrable(target) -> None:
    """Raise :class:`NotSquareIntegrableError` when ``c^2`` mass near a corner does not vanish.

    For a square-integrable density the contribution of the dyadic shell at scale
    2^-k around a corner tends to zero. The check compares shells at scales
    2^-12 and 2^-24; when the finer one keeps more than half of the coarser
    one's mass the density is declared not square integrable. Densities
    blowing up like r^-a with a > 23/24 are therefore rejected too.
    """
    density = density_of(target)
    rule = composite_rule(graded_edges((), 12), 16)
    for corner in ((0, 0), (1, 1), (0, 1), (1, 0)):
        coarse, fine = (_corner_shell(density, corner, k, rule) for k in _SHELL_LEVELS)
        if not (np.isfinite(coarse) and np.isfinite(fine)):
            raise NotSquareIntegrableError(f"squared density is not finite near corner {corner}", location=corner)
        if fine > 1e-14 and fine > 0.5 * coarse:
            raise NotSquareIntegrableError(
                f"target is not square integrable: its square does not decay near corner {corner}; shell integrals "
                f"{coarse:.3g} (scale 2^-{_SHELL_LEVELS[0]}) and {fine:.3g} (scale 2^-{_SHELL_LEVELS[1]})",
                location=corner,
            )


# --------------------------------------------------------------------------
# convergence study
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ConvergenceRow:
    p: int
    l2_error: float
    rho_model: float
    rho_target: float

    @property
    def rho_gap(self) -> float:
        return abs(self.rho_model - self.rho_target)


CONVERGENCE_HEADER = ("p", "l2_error", "rho_model", "rho_target", "rho_gap")


def rho_gap_bound(family: OrthonormalFamily) -> float:
    """Constant ``K`` with ``|rho(P c) - rho(c)| <= K ||c - P c||`` for every square-integrable ``c``.

    ``rho(c) - rho(P c) = 12 <c - P c, f>`` with ``f(x, y) = (1 - x)(1 - y)``, and
    ``c - P c`` is orthogonal to the projection of ``f``, whose squared norm is
    ``|mu|^4``. Cauchy-Schwarz then gives ``K = 12 sqrt(1/9 - |mu|^4)``.
    """
    mu2 = float(family.mu @ family.mu)
    return 12.0 * float(np.sqrt(max(1.0 / 9.0 - mu2 * mu2, 0.0)))


def convergence_study(target, family_builder: Callable[[int], OrthonormalFamily],
                      p_list: Sequence[int]) -> list[ConvergenceRow]:
    """Projection error and Spearman-rho gap of ``target`` for each family size.

    The gap never exceeds ``rho_gap_bound(family) * l2_error``.
    """
    check_square_integrable(target)
    rho_target = spearman_rho_quadrature(target)
    rows = []
    for p in p_list:
        family = family_builder(p)
        matrix = t_phi(target, family)
        model = new_model(family, matrix, atol=PROJECTION_ATOL)
        rows.append(ConvergenceRow(family.size, l2_distance(target, model), spearman_rho(model), rho_target))
    return rows


def write_convergence_csv(rows: Iterable[ConvergenceRow], fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CONVERGENCE_HEADER)
    for r in rows:
        writer.writerow([r.p, repr(r.l2_error), repr(r.rho_model), repr(r.rho_target), repr(r.rho_gap)])
