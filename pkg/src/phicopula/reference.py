"""Closed-form reference copulas used as projection targets and as oracles."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InvalidArgumentError

KINDS = ("independence", "fgm", "clayton", "frank")


@dataclass(frozen=True, eq=False)
class ReferenceCopula:
    """A copula known through its density and CDF.

    ``corner_grading`` is the number of geometric refinement levels a quadrature
    should use toward the corners, nonzero when the density is unbounded there.
    """

    kind: str
    parameter: float
    density: Callable[[np.ndarray, np.ndarray], np.ndarray]
    cdf: Callable[[np.ndarray, np.ndarray], np.ndarray]
    corner_grading: int = 0
    breakpoints: tuple[float, ...] = ()

    @property
    def label(self) -> str:
        if self.kind == "independence":
            return "independence"
        return f"{self.kind}:{self.parameter:g}"

    def __repr__(self) -> str:
        return f"ReferenceCopula({self.label})"


def _arrays(u, v):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return np.broadcast_arrays(u, v)


def _log_expm1(x: np.ndarray) -> np.ndarray:
    """``log(e^x - 1)`` for ``x >= 0``, finite for large ``x``."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        return np.where(x > 30.0, x + np.log1p(-np.exp(-x)), np.log(np.expm1(x)))


def _independence() -> ReferenceCopula:
    def density(u, v):
        u, v = _arrays(u, v)
        return np.ones(u.shape)

    def cdf(u, v):
        u, v = _arrays(u, v)
        return u * v

    return ReferenceCopula("independence", 0.0, density, cdf)


def _fgm(theta: float) -> ReferenceCopula:
    if not -1.0 <= theta <= 1.0:
        raise InvalidArgumentError(f"FGM parameter must lie in [-1, 1], got {theta}")

    def density(u, v):
        u, v = _arrays(u, v)
        return 1.0 + theta * (1.0 - 2.0 * u) * (1.0 - 2.0 * v)

    def cdf(u, v):
        u, v = _arrays(u, v)
        return u * v + theta * u * (1.0 - u) * v * (1.0 - v)

    return ReferenceCopula("fgm", float(theta), density, cdf)


def _clayton(theta: float) -> ReferenceCopula:
    if not theta > 0.0:
        raise InvalidArgumentError(f"Clayton parameter must be positive, got {theta}")

    def log_sum(lu, lv):
        # log(u^-theta + v^-theta - 1) without overflow
        return np.logaddexp(-theta * lu, _log_expm1(-theta * lv))

    def density(u, v):
        u, v = _arrays(u, v)
        with np.errstate(divide="ignore", invalid="ignore"):
            lu, lv = np.log(u), np.log(v)
            out = np.exp(
                np.log1p(theta)
                - (theta + 1.0) * (lu + lv)
                - (1.0 / theta + 2.0) * log_sum(lu, lv)
            )
        # the density vanishes on the lower edges away from the origin
        edge = (u == 0.0) | (v == 0.0)
        return np.where(edge & ~((u == 0.0) & (v == 0.0)), 0.0, out)

    def cdf(u, v):
        u, v = _arrays(u, v)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.exp(-log_sum(np.log(u), np.log(v)) / theta)
        return np.where((u == 0.0) | (v == 0.0), 0.0, out)

    return ReferenceCopula("clayton", float(theta), density, cdf, corner_grading=48)


def _frank(theta: float) -> ReferenceCopula:
    if theta == 0.0 or not np.isfinite(theta):
        raise InvalidArgumentError(f"Frank parameter must be finite and nonzero, got {theta}")
    t = abs(theta)
    log_a = np.log(-np.expm1(-t))

    def density(u, v):
        u, v = _arrays(u, v)
        if theta < 0:
            # c_{-t}(u, v) = c_t(u, 1 - v)
            v = 1.0 - v
        # e^{-tu} + e^{-tv} - e^{-t(u+v)} - e^{-t}, split into two nonnegative terms
        with np.errstate(divide="ignore"):
            log_den = np.logaddexp(
                -t * u + np.log(-np.expm1(-t * v)),
                -t * v + np.log(-np.expm1(-t * (1.0 - v))),
            )
        return np.exp(np.log(t) + log_a - t * (u + v) - 2.0 * log_den)

    def cdf(u, v):
        u, v = _arrays(u, v)
        return -np.log1p(np.expm1(-theta * u) * np.expm1(-theta * v) / np.expm1(-theta)) / theta

    return ReferenceCopula("frank", float(theta), density, cdf)


def make_reference(kind: str, parameter: float = 0.0) -> ReferenceCopula:
    """Build a reference copula; ``kind`` is one of independence, fgm, clayton, frank."""
    kind = kind.lower()
    if kind == "independence":
        return _independence()
    if kind == "fgm":
        return _fgm(float(parameter))
    if kind == "clayton":
        return _clayton(float(parameter))
    if kind == "frank":
        return _frank(float(parameter))
    raise InvalidArgumentError(f"unknown reference copula {kind!r}; expected one of {KINDS}")


def parse_reference(text: str) -> ReferenceCopula:
    """Parse descriptors such as ``"clayton:1.0"`` or ``"independence"``."""
    kind, _, value = text.strip().partition(":")
    if kind.lower() == "independence":
        return make_reference("independence")
    if not value:
        raise InvalidArgumentError(f"reference {text!r} needs a parameter, e.g. '{kind}:0.5'")
    try:
        parameter = float(value)
    except ValueError as exc:
        raise InvalidArgumentError(f"bad parameter in reference {text!r}") from exc
    return make_reference(kind, parameter)
