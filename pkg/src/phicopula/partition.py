"""Copulas built on a partition of unity (Bernstein, checkerboard).

A partition of unity ``xi`` and a doubly stochastic ``M`` give the density
``p xi(u)^T M xi(v)``. Rewriting ``psi = H xi`` with
``H = I + e1 s^T - s e1^T`` (``s`` the all-ones vector) puts it in the form
``psi^T B psi``, and orthonormalising ``psi`` turns it into a regular model.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import special

from .basis import OrthonormalFamily, RawFamily, orthonormalize, piecewise_constant_evaluators
from .copula import CopulaModel, new_model
from .errors import ConstraintViolationError, InvalidArgumentError, InvalidSourceError
from .numerics import sym_principal_sqrt

STOCHASTIC_TOL = 1e-10
NEGATIVE_TOL = 1e-12
KINDS = ("bernstein", "checkerboard")


@dataclass(frozen=True, eq=False)
class PartitionFamily:
    """Partition of unity ``xi_1..xi_p`` on [0, 1]."""

    kind: str
    p: int

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgumentError(f"unknown partition kind {self.kind!r}; expected one of {KINDS}")
        if int(self.p) != self.p or self.p < 2:
            raise InvalidArgumentError(f"partition size must be an integer >= 2, got {self.p!r}")

    @property
    def descriptor(self) -> dict:
        return {"kind": self.kind, "size": int(self.p), "parameters": {}}

    @property
    def breakpoints(self) -> tuple[float, ...]:
        if self.kind == "checkerboard":
            return tuple(np.arange(1, self.p) / self.p)
        return ()

    def xi(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return self._evaluators[0](t.ravel()).reshape(t.shape + (self.p,))

    def xi_integral(self, t) -> np.ndarray:
        """``int_0^t xi``."""
        t = np.asarray(t, dtype=float)
        return self._evaluators[1](t.ravel()).reshape(t.shape + (self.p,))

    @cached_property
    def _evaluators(self):
        p = self.p
        if self.kind == "checkerboard":
            return piecewise_constant_evaluators(np.eye(p))
        i = np.arange(1, p + 1)
        binom = special.comb(p - 1, i - 1)

        def xi(t):
            t = t[:, None]
            return binom * t ** (i - 1) * (1.0 - t) ** (p - i)

        # int_0^t of the i-th Bernstein polynomial is a regularised incomplete beta over p
        def integral(t):
            return special.betainc(i[None, :], (p - i + 1)[None, :], t[:, None]) / p

        def upper(t):
            return special.betainc((p - i + 1)[None, :], i[None, :], 1.0 - t[:, None]) / p

        return xi, integral, upper

    @cached_property
    def gram(self) -> np.ndarray:
        """Gram matrix of ``xi``; exactly ``I / p`` for the checkerboard."""
        if self.kind == "checkerboard":
            g = np.eye(self.p) / self.p
        else:
            x, w = np.polynomial.legendre.leggauss(max(self.p + 1, 2 * self.p))
            x, w = 0.5 * (x + 1.0), 0.5 * w
            f = self.xi(x)
            g = (f * w[:, None]).T @ f
            g = 0.5 * (g + g.T)
        g.setflags(write=False)
        return g

    def raw_family(self) -> RawFamily:
        """The family ``psi = H xi``: constant first member, integral ``e1``."""
        return self._raw

    @cached_property
    def _raw(self) -> RawFamily:
        h = h_matrix(self.p)
        xi, integral, upper = self._evaluators

        def lin(fn):
            return lambda t: fn(t) @ h.T

        return RawFamily(
            size=self.p,
            phi_fn=lin(xi),
            psi_fn=lin(integral),
            survival_fn=lin(upper),
            label=f"{self.kind}:{self.p}",
            descriptor=self.descriptor,
            breakpoints=self.breakpoints,
            piecewise_constant=self.kind == "checkerboard",
            degree=self.p - 1 if self.kind == "bernstein" else 0,
        )

    @cached_property
    def orthonormal(self) -> tuple[OrthonormalFamily, np.ndarray]:
        return orthonormalize(self.raw_family())


def make_partition(kind: str, p: int) -> PartitionFamily:
    return PartitionFamily(kind.lower(), p)


def h_matrix(p: int) -> np.ndarray:
    """``H = I + e1 s^T - s e1^T``."""
    h = np.eye(p)
    h[0, :] += 1.0
    h[:, 0] -= 1.0
    return h


def h_inverse(p: int) -> np.ndarray:
    """Closed form ``H^{-1} = I - e1 e1^T + s (2 e1 - s)^T / p``."""
    r = -np.ones(p)
    r[0] = 1.0
    inv = np.eye(p)
    inv[0, 0] = 0.0
    inv += np.outer(np.ones(p), r) / p
    return inv


def omega_matrix(p: int, beta: float) -> np.ndarray:
    """Closed-form ``(H Gamma H^T)^{-1/2} H`` for an orthogonal partition with ``int xi_i^2 = beta^2``."""
    g = (p - 2 + p**-0.5) / (p - 1)
    om = np.full((p, p), g - 1.0)
    np.fill_diagonal(om, g)
    om[0, :] = p**-0.5
    om[1:, 0] = -(p**-0.5)
    return om / beta


def is_doubly_stochastic(m: np.ndarray, tol: float = STOCHASTIC_TOL) -> bool:
    m = np.asarray(m, dtype=float)
    return (
        m.ndim == 2
        and m.shape[0] == m.shape[1]
        and bool(np.all(m >= -NEGATIVE_TOL))
        and np.abs(m.sum(axis=0) - 1.0).max() <= tol
        and np.abs(m.sum(axis=1) - 1.0).max() <= tol
    )


def sinkhorn(m: np.ndarray, tol: float = 1e-14, max_iter: int = 10_000) -> np.ndarray:
    """Scale a positive matrix to a doubly stochastic one by alternating normalisation."""
    out = np.array(m, dtype=float)
    if out.ndim != 2 or out.shape[0] != out.shape[1] or np.any(out <= 0.0):
        raise InvalidArgumentError("Sinkhorn scaling needs a square matrix with positive entries")
    for _ in range(max_iter):
        out /= out.sum(axis=1, keepdims=True)
        out /= out.sum(axis=0, keepdims=True)
        if np.abs(out.sum(axis=1) - 1.0).max() < tol:
            break
    return out


def discretize_copula(source, p: int) -> np.ndarray:
    """``M_ij = p * (C-volume of the cell [(i-1)/p, i/p] x [(j-1)/p, j/p])``."""
    if int(p) != p or p < 2:
        raise InvalidArgumentError(f"p must be an integer >= 2, got {p!r}")
    x = np.arange(p + 1) / p
    U, V = np.meshgrid(x, x, indexing="ij")
    c = np.asarray(source.cdf(U, V), dtype=float)
    m = p * (c[1:, 1:] - c[:-1, 1:] - c[1:, :-1] + c[:-1, :-1])
    low = float(m.min())
    if low < -STOCHASTIC_TOL:
        i, j = np.unravel_index(np.argmin(m), m.shape)
        raise InvalidSourceError(f"source assigns negative mass {low:.3g} to cell ({i + 1}, {j + 1})")
    return m


def to_copula_model(pf: PartitionFamily, m: np.ndarray) -> CopulaModel:
    """Model whose density is ``p xi(u)^T M xi(v)``, expressed in the orthonormalised basis."""
    m = np.asarray(m, dtype=float)
    if m.shape != (pf.p, pf.p):
        raise InvalidArgumentError(f"M must be {pf.p}x{pf.p}, got {m.shape}")
    if not is_doubly_stochastic(m):
        raise ConstraintViolationError(
            "M is not doubly stochastic: row sums deviate by "
            f"{np.abs(m.sum(axis=1) - 1).max():.3g}, column sums by {np.abs(m.sum(axis=0) - 1).max():.3g}, "
            f"min entry {m.min():.3g}"
        )
    hinv = h_inverse(pf.p)
    b = pf.p * hinv.T @ m @ hinv
    family, _ = pf.orthonormal
    root = sym_principal_sqrt(pf.raw_family().gram)
    return new_model(family, root @ b @ root)


def partition_density(pf: PartitionFamily, m: np.ndarray, u, v) -> np.ndarray:
    """Direct evaluation of ``p xi(u)^T M xi(v)``."""
    return pf.p * np.einsum("...i,ij,...j->...", pf.xi(u), np.asarray(m, float), pf.xi(v))
