"""Copula models ``c(u, v) = phi(u)^T A phi(v)``: evaluation, validation and algebra."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy import optimize

from .basis import OrthonormalFamily
from .errors import ConstraintViolationError, InvalidArgumentError
from .numerics import QuadratureRule

CONSTRAINT_TOL = 1e-10
TRACE_TOL = 1e-12
NONNEG_TOL = 1e-9
# a smooth-family minimum in [-1e-6, -1e-9) is not trusted either way
INCONCLUSIVE_BAND = 1e-6
WEIGHT_TOL = 1e-12
DEFAULT_RESOLUTION = 512

VALID = "valid"
INVALID = "invalid"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of a nonnegativity scan of a copula density."""

    min_value: float
    argmin: tuple[float, float]
    grid_resolution: int
    refined: bool
    verdict: str
    exact: bool = False

    def to_dict(self) -> dict:
        return {
            "min_value": self.min_value,
            "argmin": list(self.argmin),
            "grid_resolution": self.grid_resolution,
            "refined": self.refined,
            "verdict": self.verdict,
            "exact": self.exact,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ValidationReport":
        return cls(
            min_value=float(d["min_value"]),
            argmin=tuple(float(x) for x in d["argmin"]),
            grid_resolution=int(d["grid_resolution"]),
            refined=bool(d["refined"]),
            verdict=str(d["verdict"]),
            exact=bool(d.get("exact", False)),
        )


def _check_unit(x, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if not np.all((x >= 0.0) & (x <= 1.0)):
        raise InvalidArgumentError(f"{name} must lie in [0, 1]")
    return x


@dataclass(frozen=True, eq=False)
class CopulaModel:
    """A member of the family: an orthonormal family paired with a matrix.

    Construct through :func:`new_model`, which checks the linear constraints.
    Nonnegativity is only certified by :func:`validate`.
    """

    family: OrthonormalFamily
    matrix: np.ndarray
    validation: ValidationReport | None = None

    @property
    def p(self) -> int:
        return self.family.size

    @property
    def is_valid(self) -> bool:
        return self.validation is not None and self.validation.verdict == VALID

    def density(self, u, v) -> np.ndarray:
        u = _check_unit(u, "u")
        v = _check_unit(v, "v")
        u, v = np.broadcast_arrays(u, v)
        fu = self.family.phi(u)
        fv = self.family.phi(v)
        return np.einsum("...i,ij,...j->...", fu, self.matrix, fv)

    def cdf(self, u, v) -> np.ndarray:
        u = _check_unit(u, "u")
        v = _check_unit(v, "v")
        u, v = np.broadcast_arrays(u, v)
        return np.einsum("...i,ij,...j->...", self.family.psi(u), self.matrix, self.family.psi(v))

    def survival(self, u, v) -> np.ndarray:
        """Survival copula ``1 - u - v + C(u, v)``, evaluated without cancellation."""
        u = _check_unit(u, "u")
        v = _check_unit(v, "v")
        u, v = np.broadcast_arrays(u, v)
        su = self.family.survival_psi(u)
        sv = self.family.survival_psi(v)
        return np.einsum("...i,ij,...j->...", su, self.matrix, sv)

    def density_grid(self, us, vs) -> np.ndarray:
        """``len(us) x len(vs)`` array of density values."""
        fu = self.family.phi(_check_unit(us, "u"))
        fv = self.family.phi(_check_unit(vs, "v"))
        return fu @ self.matrix @ fv.T

    def cdf_grid(self, us, vs) -> np.ndarray:
        gu = self.family.psi(_check_unit(us, "u"))
        gv = self.family.psi(_check_unit(vs, "v"))
        return gu @ self.matrix @ gv.T

    def with_validation(self, report: ValidationReport) -> "CopulaModel":
        return replace(self, validation=report)

    def validated(self, resolution: int = DEFAULT_RESOLUTION, refine: bool = True) -> "CopulaModel":
        return self.with_validation(validate(self, resolution, refine))

    def __repr__(self) -> str:
        verdict = self.validation.verdict if self.validation else "unchecked"
        return f"CopulaModel({self.family.label}, p={self.p}, {verdict})"


def e1(p: int) -> np.ndarray:
    out = np.zeros(p)
    out[0] = 1.0
    return out


def new_model(family: OrthonormalFamily, matrix, atol: float = CONSTRAINT_TOL) -> CopulaModel:
    """Check ``A e1 = e1``, ``A^T e1 = e1`` and ``tr A >= 0``, then wrap the matrix."""
    a = np.array(matrix, dtype=float)
    p = family.size
    if a.shape != (p, p):
        raise InvalidArgumentError(f"matrix must be {p}x{p} for family {family.label}, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidArgumentError("matrix has non-finite entries")
    col = a @ e1(p) - e1(p)
    row = a.T @ e1(p) - e1(p)
    if np.abs(col).max() > atol or np.abs(row).max() > atol:
        raise ConstraintViolationError(
            "e1 is not a left and right eigenvector with eigenvalue 1: "
            f"first column deviates by {np.abs(col).max():.3g} "
            f"(row {int(np.abs(col).argmax()) + 1}), first row by {np.abs(row).max():.3g} "
            f"(column {int(np.abs(row).argmax()) + 1})"
        )
    if np.trace(a) < -TRACE_TOL:
        raise ConstraintViolationError(f"matrix trace {np.trace(a):.3g} is negative")
    a.setflags(write=False)
    return CopulaModel(family, a)


def independence_model(family: OrthonormalFamily) -> CopulaModel:
    return new_model(family, np.outer(e1(family.size), e1(family.size)))


def diagonal_model(family: OrthonormalFamily, theta: float) -> CopulaModel:
    """Model with matrix ``diag(1, theta, ..., theta)``."""
    d = np.full(family.size, float(theta))
    d[0] = 1.0
    return new_model(family, np.diag(d))


# --------------------------------------------------------------------------
# validation
# --------------------------------------------------------------------------


def _cell_midpoints(family: OrthonormalFamily) -> np.ndarray:
    edges = np.array([0.0, *family.breakpoints, 1.0])
    return 0.5 * (edges[:-1] + edges[1:])


def validate(model: CopulaModel, resolution: int = DEFAULT_RESOLUTION, refine: bool = True) -> ValidationReport:
    """Scan the density for negative values.

    Piecewise-constant families are checked on the midpoint of every cell, which
    is exact. Smooth families are scanned on a ``resolution x resolution``
    uniform grid including the edges, then optionally refined by Nelder-Mead
    from the worst grid points.
    """
    if resolution < 2:
        raise InvalidArgumentError(f"resolution must be at least 2, got {resolution}")
    family = model.family
    if family.piecewise_constant:
        mids = _cell_midpoints(family)
        grid = model.density_grid(mids, mids)
        i, j = np.unravel_index(np.argmin(grid), grid.shape)
        low = float(grid[i, j])
        verdict = VALID if low >= -NONNEG_TOL else INVALID
        return ValidationReport(low, (float(mids[i]), float(mids[j])), mids.size, False, verdict, exact=True)

    x = np.linspace(0.0, 1.0, resolution)
    grid = model.density_grid(x, x)
    flat = np.argsort(grid, axis=None)
    i, j = np.unravel_index(flat[0], grid.shape)
    low, where = float(grid[i, j]), (float(x[i]), float(x[j]))
    if refine:
        def objective(z):
            return float(model.density(np.clip(z[0], 0, 1), np.clip(z[1], 0, 1)))

        for k in flat[:4]:
            start = np.array([x[k // resolution], x[k % resolution]])
            res = optimize.minimize(
                objective,
                start,
                method="Nelder-Mead",
                bounds=[(0.0, 1.0), (0.0, 1.0)],
                options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 2000},
            )
            if res.fun < low:
                low, where = float(res.fun), (float(res.x[0]), float(res.x[1]))
    if low >= -NONNEG_TOL:
        verdict = VALID
    elif low >= -INCONCLUSIVE_BAND:
        verdict = INCONCLUSIVE
    else:
        verdict = INVALID
    return ValidationReport(low, where, resolution, bool(refine), verdict)


def margin_defect(model: CopulaModel, points: int = 101, rule: QuadratureRule | None = None) -> float:
    """Largest deviation from 1 of ``int c(u, v) dv`` and ``int c(v, u) dv`` over a u-grid."""
    if rule is None:
        rule = model.family.quadrature()
    u = np.linspace(0.0, 1.0, points)
    grid = model.density_grid(u, rule.nodes)
    grid_t = model.density_grid(rule.nodes, u)
    rows = grid @ rule.weights
    cols = rule.weights @ grid_t
    return float(max(np.abs(rows - 1.0).max(), np.abs(cols - 1.0).max()))


# --------------------------------------------------------------------------
# algebra
# --------------------------------------------------------------------------


def _same_family(models: Sequence[CopulaModel]) -> OrthonormalFamily:
    family = models[0].family
    for m in models[1:]:
        if not family.same_as(m.family):
            raise InvalidArgumentError(f"family mismatch: {family.label} vs {m.family.label}")
    return family


def star(m1: CopulaModel, m2: CopulaModel) -> CopulaModel:
    """Markov product ``int c1(u, s) c2(s, v) ds``, i.e. the matrix product."""
    family = _same_family([m1, m2])
    return new_model(family, m1.matrix @ m2.matrix)


def star_integral(m1: CopulaModel, m2: CopulaModel, rule: QuadratureRule | None = None):
    """Density of ``m1 * m2`` computed by quadrature over the middle variable.

    Returns a vectorised callable ``(u, v) -> value``. This does not use the
    matrix product and serves as an independent check of :func:`star`.
    """
    family = _same_family([m1, m2])
    if rule is None:
        rule = family.quadrature()
    fs = family.phi(rule.nodes)

    def density(u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        left = family.phi(u) @ m1.matrix @ fs.T  # c1(u, s_k)
        right = family.phi(v) @ m2.matrix.T @ fs.T  # c2(s_k, v)
        return (left * right) @ rule.weights

    return density


def mix(models: Sequence[CopulaModel], weights: Sequence[float]) -> CopulaModel:
    """Convex combination of models sharing a family.

    The result is unvalidated; it is valid whenever every input is.
    """
    if len(models) == 0 or len(models) != len(weights):
        raise InvalidArgumentError("need one weight per model and at least one model")
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0.0) or abs(w.sum() - 1.0) > WEIGHT_TOL:
        raise InvalidArgumentError(f"weights must be nonnegative and sum to 1 (sum = {w.sum()!r})")
    family = _same_family(models)
    a = sum(wi * m.matrix for wi, m in zip(w, models))
    return new_model(family, a)


def cesaro_weights(levels: Sequence[int], q: int) -> np.ndarray:
    """Weights ``max(q + 1 - max(L_i, L_j), 0) / q`` of the Cesaro mean of q truncations."""
    lv = np.asarray(levels, dtype=float)
    top = np.maximum.outer(lv, lv)
    return np.clip(q + 1.0 - top, 0.0, None) / q


def cesaro_aggregate(model: CopulaModel, q: int | None = None) -> CopulaModel:
    """Average of the q nested truncations of ``model``.

    Truncation of order k keeps the functions whose level is at most k (one
    function per level by default; a harmonic's sine/cosine pair for the
    trigonometric family). The input is assumed valid for every truncation.
    """
    levels = model.family.levels
    if q is None:
        q = max(levels)
    if int(q) != q or q < 1:
        raise InvalidArgumentError(f"q must be a positive integer, got {q!r}")
    if q > max(levels):
        raise InvalidArgumentError(f"q={q} exceeds the {max(levels)} levels of {model.family.label}")
    return new_model(model.family, cesaro_weights(levels, int(q)) * model.matrix)
