"""Orthonormal function families on [0, 1] whose first member is the constant 1.

Every family carries three vectorised evaluators:

* ``phi(t)``           the functions themselves,
* ``psi(t)``           their antiderivatives ``int_0^t phi``,
* ``survival_psi(t)``  the upper integrals ``int_t^1 phi`` (kept separate from
  ``e1 - psi(t)`` so that tail quantities near 1 do not suffer cancellation),

plus the structural moments ``mu = int x phi(x) dx`` and
``theta = int psi(u) phi(u)^T du`` computed once by quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import Polynomial

from .errors import InvalidArgumentError, InvalidFamilyError
from .numerics import (
    QuadratureRule,
    check_conditioning,
    composite_rule,
    default_order,
    sym_inv_sqrt,
    sym_principal_sqrt,
)

Evaluator = Callable[[np.ndarray], np.ndarray]

ORTHO_TOL = 1e-10
INTEGRAL_TOL = 1e-10


def _vectorised(fn: Evaluator, t, size: int) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    flat = np.ravel(t)
    out = np.asarray(fn(flat), dtype=float).reshape(flat.size, size)
    return out.reshape(t.shape + (size,))


@dataclass(frozen=True, eq=False)
class _FunctionVector:
    """Shared machinery of raw and orthonormal families."""

    size: int
    phi_fn: Evaluator
    psi_fn: Evaluator
    survival_fn: Evaluator
    label: str
    descriptor: dict
    breakpoints: tuple[float, ...] = ()
    piecewise_constant: bool = False
    degree: int | None = None

    @property
    def p(self) -> int:
        return self.size

    def _evaluate(self, fn: Evaluator, t) -> np.ndarray:
        return _vectorised(fn, t, self.size)

    def quadrature(self, order: int | None = None) -> QuadratureRule:
        """Composite Gauss rule whose panels follow the family's discontinuities."""
        if order is None:
            order = default_order()
            if self.degree is not None:
                order = max(order, self.degree + 1)
        return composite_rule((0.0, *self.breakpoints, 1.0), order)

    def gram_by_quadrature(self, order: int | None = None) -> np.ndarray:
        rule = self.quadrature(order)
        f = self._evaluate(self.phi_fn, rule.nodes)
        return (f * rule.weights[:, None]).T @ f

    def integral_by_quadrature(self, order: int | None = None) -> np.ndarray:
        rule = self.quadrature(order)
        return rule.weights @ self._evaluate(self.phi_fn, rule.nodes)


@dataclass(frozen=True, eq=False)
class OrthonormalFamily(_FunctionVector):
    """Vector ``phi`` of ``size`` orthonormal functions with ``phi_1 = 1``.

    ``levels`` gives the nesting order used by Cesaro aggregation: the
    truncation of order ``k`` keeps every function whose level is ``<= k``.
    """

    levels: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.levels is None:
            object.__setattr__(self, "levels", tuple(range(1, self.size + 1)))
        if len(self.levels) != self.size:
            raise InvalidArgumentError("levels must have one entry per function")

    def phi(self, t) -> np.ndarray:
        return self._evaluate(self.phi_fn, t)

    def psi(self, t) -> np.ndarray:
        return self._evaluate(self.psi_fn, t)

    def survival_psi(self, t) -> np.ndarray:
        return self._evaluate(self.survival_fn, t)

    @cached_property
    def mu(self) -> np.ndarray:
        rule = self.quadrature()
        mu = (rule.weights * rule.nodes) @ self.phi(rule.nodes)
        mu[0] = 0.5  # int_0^1 x dx, exactly
        mu.setflags(write=False)
        return mu

    @cached_property
    def theta(self) -> np.ndarray:
        rule = self.quadrature()
        big_psi = self.psi(rule.nodes)
        f = self.phi(rule.nodes)
        theta = (big_psi * rule.weights[:, None]).T @ f
        theta[0, 0] = 0.5
        theta.setflags(write=False)
        return theta

    def same_as(self, other: "OrthonormalFamily") -> bool:
        return self is other or self.descriptor == other.descriptor

    def __repr__(self) -> str:
        return f"OrthonormalFamily({self.label}, size={self.size})"


@dataclass(frozen=True, eq=False)
class RawFamily(_FunctionVector):
    """Non-orthogonal family ``psi`` with ``psi_1 = 1`` and ``int psi = e1``.

    The Gram matrix is always recomputed by quadrature.
    """

    def psi_raw(self, t) -> np.ndarray:
        return self._evaluate(self.phi_fn, t)

    def antiderivative(self, t) -> np.ndarray:
        return self._evaluate(self.psi_fn, t)

    @cached_property
    def gram(self) -> np.ndarray:
        g = self.gram_by_quadrature()
        g = 0.5 * (g + g.T)
        g.setflags(write=False)
        return g

    def __repr__(self) -> str:
        return f"RawFamily({self.label}, size={self.size})"


def _map_linear(fn: Evaluator, transform: np.ndarray) -> Evaluator:
    def mapped(t):
        return fn(t) @ transform.T

    return mapped


def orthonormalize(raw: RawFamily) -> tuple[OrthonormalFamily, np.ndarray]:
    """Turn ``raw`` into an orthonormal family ``Gamma^{-1/2} psi``.

    Returns the family and the transform ``Gamma^{-1/2}``. A matrix ``B`` valid
    for ``raw`` corresponds to ``Gamma^{1/2} B Gamma^{1/2}`` for the new family
    (see :func:`lift_matrix`).
    """
    integral = raw.integral_by_quadrature()
    e1 = np.zeros(raw.size)
    e1[0] = 1.0
    gap = float(np.abs(integral - e1).max())
    if gap > INTEGRAL_TOL:
        raise InvalidFamilyError(f"{raw.label}: integral of psi differs from e1 by {gap:.3g}")
    first = raw.psi_raw(np.linspace(0.0, 1.0, 17))[:, 0]
    if np.abs(first - 1.0).max() > INTEGRAL_TOL:
        raise InvalidFamilyError(f"{raw.label}: first function is not the constant 1")
    gram = raw.gram
    check_conditioning(gram)
    transform = sym_inv_sqrt(gram)
    # the principal root fixes e1 because gram does; pin rounding noise
    transform[0, :] = e1
    transform[:, 0] = e1
    transform.setflags(write=False)
    family = OrthonormalFamily(
        size=raw.size,
        phi_fn=_map_linear(raw.phi_fn, transform),
        psi_fn=_map_linear(raw.psi_fn, transform),
        survival_fn=_map_linear(raw.survival_fn, transform),
        label=raw.label,
        descriptor=raw.descriptor,
        breakpoints=raw.breakpoints,
        piecewise_constant=raw.piecewise_constant,
        degree=raw.degree,
    )
    return family, transform


def lift_matrix(raw: RawFamily, b: np.ndarray) -> np.ndarray:
    """Matrix ``Gamma^{1/2} B Gamma^{1/2}`` representing ``psi^T B psi`` in the orthonormal basis."""
    b = np.asarray(b, dtype=float)
    if b.shape != (raw.size, raw.size):
        raise InvalidArgumentError(f"matrix must be {raw.size}x{raw.size}, got {b.shape}")
    root = sym_principal_sqrt(raw.gram)
    return root @ b @ root


# --------------------------------------------------------------------------
# trigonometric family
# --------------------------------------------------------------------------


def make_trig_family(harmonics: int) -> OrthonormalFamily:
    """Constant, then sqrt(2) sin(2 pi j x), sqrt(2) cos(2 pi j x) for j = 1..harmonics."""
    if int(harmonics) != harmonics or harmonics < 1:
        raise InvalidArgumentError(f"harmonics must be a positive integer, got {harmonics!r}")
    h = int(harmonics)
    j = np.arange(1, h + 1, dtype=float)
    r2 = np.sqrt(2.0)

    def interleave(first, sines, cosines):
        out = np.empty((first.size, 2 * h + 1))
        out[:, 0] = first
        out[:, 1::2] = sines
        out[:, 2::2] = cosines
        return out

    def phi(t):
        a = 2.0 * np.pi * np.outer(t, j)
        return interleave(np.ones_like(t), r2 * np.sin(a), r2 * np.cos(a))

    def psi(t):
        a = 2.0 * np.pi * np.outer(t, j)
        k = r2 / (2.0 * np.pi * j)
        # 1 - cos(a) = 2 sin^2(a/2) avoids cancellation near t = 0
        return interleave(t, k * 2.0 * np.sin(0.5 * a) ** 2, k * np.sin(a))

    def survival(t):
        s = 1.0 - t
        a = 2.0 * np.pi * np.outer(s, j)
        k = r2 / (2.0 * np.pi * j)
        return interleave(s, -k * 2.0 * np.sin(0.5 * a) ** 2, k * np.sin(a))

    levels = (1,) + tuple(lvl for jj in range(1, h + 1) for lvl in (jj + 1, jj + 1))
    return OrthonormalFamily(
        size=2 * h + 1,
        phi_fn=phi,
        psi_fn=psi,
        survival_fn=survival,
        label=f"trig:{h}",
        descriptor={"kind": "trig", "size": 2 * h + 1, "parameters": {"harmonics": h}},
        levels=levels,
    )


# --------------------------------------------------------------------------
# piecewise constant families (Haar, and anything built from a cell table)
# --------------------------------------------------------------------------


def _cell_index(t: np.ndarray, cells: int) -> np.ndarray:
    # half-open cells, the last one closed at 1
    return np.clip(np.floor(t * cells).astype(np.int64), 0, cells - 1)


def piecewise_constant_evaluators(table: np.ndarray) -> tuple[Evaluator, Evaluator, Evaluator]:
    """Evaluators for functions constant on the ``n`` equal cells of [0, 1].

    ``table[c, k]`` is the value of function ``k`` on cell ``c``.
    """
    table = np.array(table, dtype=float)
    cells = table.shape[0]
    width = 1.0 / cells
    below = np.vstack([np.zeros(table.shape[1]), np.cumsum(table, axis=0)]) * width
    above = below[-1] - below

    def phi(t):
        return table[_cell_index(t, cells)]

    def psi(t):
        c = _cell_index(t, cells)
        return below[c] + (t - c * width)[:, None] * table[c]

    def survival(t):
        c = _cell_index(t, cells)
        return above[c + 1] + ((c + 1) * width - t)[:, None] * table[c]

    return phi, psi, survival


def haar_index(i: int) -> tuple[int, int]:
    """Decompose ``i >= 1`` as ``2^(q-1) + r`` with ``0 <= r < 2^(q-1)``; returns ``(q, r)``."""
    q = int(i).bit_length()
    return q, i - 2 ** (q - 1)


def _dyadic_interval(k: int) -> tuple[float, float]:
    q, r = haar_index(k)
    width = 2.0 ** -(q - 1)
    return r * width, (r + 1) * width


def haar_table(levels: int) -> np.ndarray:
    """Cell table (2^J cells x 2^J functions) of the Haar family with J = ``levels``."""
    p = 2 ** levels
    table = np.zeros((p, p))
    table[:, 0] = 1.0
    mids = (np.arange(p) + 0.5) / p
    for i in range(1, p):
        q, _ = haar_index(i)
        lo_pos, hi_pos = _dyadic_interval(2 * i)
        lo_neg, hi_neg = _dyadic_interval(2 * i + 1)
        pos = (mids >= lo_pos) & (mids < hi_pos)
        neg = (mids >= lo_neg) & (mids < hi_neg)
        table[:, i] = 2.0 ** ((q - 1) / 2.0) * (pos.astype(float) - neg.astype(float))
    return table


def make_haar_family(levels: int) -> OrthonormalFamily:
    """Haar family of size ``p = 2^levels``: the constant plus all wavelets of level < ``levels``."""
    if int(levels) != levels or levels < 0:
        raise InvalidArgumentError(f"levels must be a nonnegative integer, got {levels!r}")
    J = int(levels)
    p = 2**J
    phi, psi, survival = piecewise_constant_evaluators(haar_table(J))
    return OrthonormalFamily(
        size=p,
        phi_fn=phi,
        psi_fn=psi,
        survival_fn=survival,
        label=f"haar:{p}",
        descriptor={"kind": "haar", "size": p, "parameters": {"levels": J}},
        breakpoints=tuple(np.arange(1, p) / p),
        piecewise_constant=True,
    )


# --------------------------------------------------------------------------
# polynomial families
# --------------------------------------------------------------------------


def polynomial_evaluators(polys: Sequence[Polynomial]) -> tuple[Evaluator, Evaluator, Evaluator]:
    """Closed-form evaluators for a list of polynomials and their integrals."""
    polys = [Polynomial(pl.coef) for pl in polys]
    integrals = [pl.integ(lbnd=0.0) for pl in polys]
    # int_t^1 P = Q(1 - t), Q expanded in s = 1 - t
    flip = Polynomial([1.0, -1.0])
    tails = [Polynomial([P(1.0)]) - P(flip) for P in integrals]

    def stack(fns):
        def ev(t):
            return np.column_stack([f(t) for f in fns])

        return ev

    phi = stack(polys)
    psi = stack(integrals)
    tail_ev = stack(tails)

    def survival(t):
        return tail_ev(1.0 - t)

    return phi, psi, survival


def make_fgm_family() -> OrthonormalFamily:
    """The two-function family ``(1, sqrt(3)(1 - 2x))`` underlying FGM copulas."""
    r3 = np.sqrt(3.0)
    phi, psi, survival = polynomial_evaluators([Polynomial([1.0]), Polynomial([r3, -2.0 * r3])])
    return OrthonormalFamily(
        size=2,
        phi_fn=phi,
        psi_fn=psi,
        survival_fn=survival,
        label="fgm",
        descriptor={"kind": "fgm", "size": 2, "parameters": {}},
        degree=1,
    )


def _raw_polynomial_family(polys, label, descriptor) -> RawFamily:
    phi, psi, survival = polynomial_evaluators(polys)
    return RawFamily(
        size=len(polys),
        phi_fn=phi,
        psi_fn=psi,
        survival_fn=survival,
        label=label,
        descriptor=descriptor,
        degree=max(pl.degree() for pl in polys),
    )


def cubic_section_raw_family() -> RawFamily:
    """Raw family ``(1, 1 - 4t + 3t^2, 2t - 3t^2)`` behind copulas with cubic sections.

    Both non-constant members integrate to zero; the Gram matrix is whatever
    quadrature gives.
    """
    polys = [Polynomial([1.0]), Polynomial([1.0, -4.0, 3.0]), Polynomial([0.0, 2.0, -3.0])]
    return _raw_polynomial_family(polys, "cubic", {"kind": "cubic", "size": 3, "parameters": {}})


def iterated_fgm_exponents(j: int) -> tuple[int, int]:
    """Exponents ``(alpha_j, beta_j) = (floor(j/2) + 1, floor((j+1)/2))`` of the j-th FGM term."""
    return j // 2 + 1, (j + 1) // 2


def iterated_fgm_raw_family(terms: int) -> RawFamily:
    """Raw family ``(1, f_1', ..., f_terms')`` with ``f_j(u) = u^alpha_j (1-u)^beta_j``.

    The iterated FGM copula ``uv + sum theta_j f_j(u) f_j(v)`` then has density
    ``psi(u)^T diag(1, theta) psi(v)``.
    """
    if int(terms) != terms or terms < 1:
        raise InvalidArgumentError(f"terms must be a positive integer, got {terms!r}")
    polys = [Polynomial([1.0])]
    x = Polynomial([0.0, 1.0])
    for j in range(1, terms + 1):
        a, b = iterated_fgm_exponents(j)
        polys.append((x**a * (1 - x) ** b).deriv())
    return _raw_polynomial_family(
        polys,
        f"iterated_fgm:{terms}",
        {"kind": "iterated_fgm", "size": terms + 1, "parameters": {"terms": int(terms)}},
    )
