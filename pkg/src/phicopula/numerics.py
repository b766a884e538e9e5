"""Quadrature on [0, 1] and [0, 1]^2, plus symmetric matrix square roots."""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidArgumentError, NumericError, SingularMatrixError

DEFAULT_ORDER = 64
SYMMETRY_TOL = 1e-12
PSD_TOL = 1e-12
INV_SQRT_TOL = 1e-10
MAX_CONDITION = 1e12


def default_order() -> int:
    """Quadrature order used when none is given; ``COPULA_QUAD_ORDER`` overrides it."""
    raw = os.environ.get("COPULA_QUAD_ORDER")
    if raw is None:
        return DEFAULT_ORDER
    try:
        order = int(raw)
    except ValueError as exc:
        raise InvalidArgumentError(f"COPULA_QUAD_ORDER must be an integer, got {raw!r}") from exc
    if order < 1:
        raise InvalidArgumentError(f"COPULA_QUAD_ORDER must be positive, got {order}")
    return order


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Nodes and weights of a rule on [0, 1].

    ``order`` is the Gauss order of each panel; a plain Gauss-Legendre rule has a
    single panel, so ``order`` is then the node count.
    """

    nodes: np.ndarray
    weights: np.ndarray
    order: int

    def __len__(self) -> int:
        return self.nodes.size

    def integrate(self, f: Callable[[np.ndarray], np.ndarray]) -> float:
        values = np.asarray(f(self.nodes), dtype=float)
        _check_finite_1d(values, self.nodes)
        return float(values @ self.weights)


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@lru_cache(maxsize=64)
def _legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    return _readonly(0.5 * (x + 1.0)), _readonly(0.5 * w)


def gauss_legendre_rule(order: int | None = None) -> QuadratureRule:
    """Gauss-Legendre rule with ``order`` nodes, mapped affinely onto [0, 1]."""
    if order is None:
        order = default_order()
    if int(order) != order or order < 1:
        raise InvalidArgumentError(f"quadrature order must be a positive integer, got {order!r}")
    x, w = _legendre(int(order))
    return QuadratureRule(x, w, int(order))


def composite_rule(edges: Sequence[float], order: int | None = None) -> QuadratureRule:
    """Gauss-Legendre on every panel ``[edges[k], edges[k+1]]``.

    Panels never straddle an edge, so integrands with jumps at the edges are
    handled exactly as their smooth pieces are.
    """
    base = gauss_legendre_rule(order)
    e = np.unique(np.asarray(edges, dtype=float))
    if e.size < 2 or e[0] < 0.0 or e[-1] > 1.0:
        raise InvalidArgumentError("panel edges must contain at least two points of [0, 1]")
    h = np.diff(e)
    nodes = (e[:-1, None] + h[:, None] * base.nodes[None, :]).ravel()
    weights = (h[:, None] * base.weights[None, :]).ravel()
    return QuadratureRule(_readonly(nodes), _readonly(weights), base.order)


def graded_edges(base_edges: Sequence[float] = (0.0, 1.0), levels: int = 0) -> np.ndarray:
    """Panel edges refined geometrically toward 0 and 1.

    ``levels`` extra edges at 2^-k and 1 - 2^-k (k = 2 .. levels+1) are merged into
    ``base_edges``; useful when the integrand is singular at a corner of the square.
    """
    e = [0.0, 1.0, *map(float, base_edges)]
    for k in range(2, levels + 2):
        e.extend((2.0 ** -k, 1.0 - 2.0 ** -k))
    return np.unique(np.asarray(e))


def _check_finite_1d(values: np.ndarray, nodes: np.ndarray) -> None:
    bad = ~np.isfinite(values)
    if bad.any():
        idx = int(np.flatnonzero(bad)[0])
        raise NumericError(f"non-finite integrand value at x={nodes[idx]!r}", location=(float(nodes[idx]),))


def evaluate_on_grid(f, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Values ``f(x_i, y_j)`` as an ``len(x) x len(y)`` array, with a finiteness check."""
    U, V = np.meshgrid(x, y, indexing="ij")
    values = np.asarray(f(U, V), dtype=float)
    if values.shape != U.shape:
        values = np.broadcast_to(values, U.shape)
    bad = ~np.isfinite(values)
    if bad.any():
        i, j = np.argwhere(bad)[0]
        loc = (float(x[i]), float(y[j]))
        raise NumericError(f"non-finite integrand value at (u, v)={loc}", location=loc)
    return values


def integrate_2d(f, rule: QuadratureRule | None = None, rule_v: QuadratureRule | None = None) -> float:
    """Tensor-product quadrature ``sum_i sum_j w_i w_j f(x_i, x_j)``.

    ``f`` must accept broadcast arrays. A second rule may be given for the
    ``v`` axis.
    """
    if rule is None:
        rule = gauss_legendre_rule()
    if rule_v is None:
        rule_v = rule
    values = evaluate_on_grid(f, rule.nodes, rule_v.nodes)
    return float(rule.weights @ values @ rule_v.weights)


def _checked_eigh(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidArgumentError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidArgumentError("matrix has non-finite entries")
    scale = max(1.0, float(np.abs(m).max(initial=0.0)))
    asym = float(np.abs(m - m.T).max(initial=0.0))
    if asym > SYMMETRY_TOL * scale:
        raise InvalidArgumentError(f"matrix is not symmetric (max |M - M^T| = {asym:.3g})")
    return np.linalg.eigh(0.5 * (m + m.T))


def sym_principal_sqrt(m: np.ndarray) -> np.ndarray:
    """Principal (positive semi-definite) square root of a symmetric PSD matrix.

    Eigenvalues in ``[-1e-12, 0)`` are clamped to zero; anything more negative is
    rejected. Any eigenvector of ``m`` stays an eigenvector of the root, so a
    matrix fixing e1 has a root fixing e1.
    """
    lam, vec = _checked_eigh(m)
    if lam.size and lam[0] < -PSD_TOL:
        raise InvalidArgumentError(f"matrix is not positive semi-definite (eigenvalue {lam[0]:.3g})")
    root = (vec * np.sqrt(np.clip(lam, 0.0, None))) @ vec.T
    return 0.5 * (root + root.T)


def sym_inv_sqrt(m: np.ndarray) -> np.ndarray:
    """Inverse of :func:`sym_principal_sqrt`; refuses eigenvalues below 1e-10."""
    lam, vec = _checked_eigh(m)
    if lam.size and lam[0] < INV_SQRT_TOL:
        raise SingularMatrixError(f"matrix is numerically singular (smallest eigenvalue {lam[0]:.3g})")
    root = (vec / np.sqrt(lam)) @ vec.T
    return 0.5 * (root + root.T)


def condition_number(m: np.ndarray) -> float:
    lam, _ = _checked_eigh(m)
    if lam[0] <= 0.0:
        return np.inf
    return float(lam[-1] / lam[0])


def check_conditioning(m: np.ndarray, what: str = "Gram matrix") -> None:
    cond = condition_number(m)
    if cond > MAX_CONDITION:
        raise SingularMatrixError(f"{what} is ill conditioned (condition number {cond:.3g})")


GRADED_PANEL_ORDER = 20


def rule_for(obj, order: int | None = None) -> QuadratureRule:
    """Composite rule adapted to a family, model or reference copula.

    Panels follow the object's discontinuities (``breakpoints``) and, when the
    object declares ``corner_grading`` levels, are refined geometrically toward
    0 and 1 with a lower per-panel order.
    """
    family = getattr(obj, "family", None)
    if family is not None:
        obj = family
    breakpoints = tuple(getattr(obj, "breakpoints", ()))
    grading = int(getattr(obj, "corner_grading", 0))
    if order is None:
        if grading:
            order = GRADED_PANEL_ORDER
        else:
            order = default_order()
            degree = getattr(obj, "degree", None)
            if degree is not None:
                order = max(order, degree + 1)
    return composite_rule(graded_edges(breakpoints, grading), order)
