"""Sampling by conditional inversion and the two moment estimators of ``A``."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .basis import OrthonormalFamily
from .copula import INVALID, VALID, CopulaModel, new_model, validate
from .errors import ConstraintViolationError, InvalidArgumentError, NumericError

BISECTION_TOL = 1e-12
BISECTION_MAX_ITER = 200
BRACKET_TOL = 1e-9
ESTIMATORS = ("a1", "a2")


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Pairs ``(U_i, V_i)`` in the unit square, with the seed that produced them."""

    pairs: np.ndarray
    seed: int | None
    source_label: str

    def __post_init__(self):
        pairs = np.asarray(self.pairs, dtype=float)
        if pairs.ndim != 2 or pairs.shape[1] != 2:
            raise InvalidArgumentError(f"pairs must have shape (n, 2), got {pairs.shape}")
        if not np.all((pairs >= 0.0) & (pairs <= 1.0)):
            raise InvalidArgumentError("sample coordinates must lie in [0, 1]")
        pairs.setflags(write=False)
        object.__setattr__(self, "pairs", pairs)

    @property
    def n(self) -> int:
        return self.pairs.shape[0]

    @property
    def u(self) -> np.ndarray:
        return self.pairs[:, 0]

    @property
    def v(self) -> np.ndarray:
        return self.pairs[:, 1]


def _conditional_cdf(weights: np.ndarray, family: OrthonormalFamily, v: np.ndarray) -> np.ndarray:
    return np.einsum("ij,ij->i", weights, family.psi(v))


def sample(model: CopulaModel, n: int, seed: int) -> SampleSet:
    """Draw ``n`` pairs from a validated model.

    ``U`` is uniform and ``V`` solves ``phi(U)^T A Psi(V) = W`` for an independent
    uniform ``W``; the left side is the conditional CDF of ``V`` given ``U``, which
    is nondecreasing in ``V`` for a nonnegative density. The generator is numpy's
    PCG64 seeded with ``seed``, and the pairs are a deterministic function of it.
    """
    if model.validation is None or model.validation.verdict != VALID:
        verdict = model.validation.verdict if model.validation else "unchecked"
        raise InvalidArgumentError(f"refusing to sample from a model whose verdict is {verdict!r}")
    if int(n) != n or n < 1:
        raise InvalidArgumentError(f"n must be a positive integer, got {n!r}")
    n = int(n)
    rng = np.random.default_rng(seed)
    u = rng.random(n)
    w = rng.random(n)
    weights = model.family.phi(u) @ model.matrix

    # at v = 1 the conditional CDF is the marginal density of U, i.e. 1
    lo_val = _conditional_cdf(weights, model.family, np.zeros(n))
    hi_val = _conditional_cdf(weights, model.family, np.ones(n))
    bad = (np.abs(lo_val) > BRACKET_TOL) | (np.abs(hi_val - 1.0) > BRACKET_TOL)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise NumericError(
            f"conditional CDF does not run from 0 to 1 at u={u[i]!r} "
            f"(values {lo_val[i]:.3g}, {hi_val[i]:.3g})",
            location=(float(u[i]),),
        )

    lo = np.zeros(n)
    hi = np.ones(n)
    for _ in range(BISECTION_MAX_ITER):
        mid = 0.5 * (lo + hi)
        val = _conditional_cdf(weights, model.family, mid)
        low = val < -BRACKET_TOL
        high = val > 1.0 + BRACKET_TOL
        if low.any() or high.any():
            i = int(np.flatnonzero(low | high)[0])
            raise NumericError(
                f"conditional CDF leaves [0, 1] at (u, v)=({u[i]!r}, {mid[i]!r}): {val[i]:.3g}",
                location=(float(u[i]), float(mid[i])),
            )
        below = np.clip(val, 0.0, 1.0) < w
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if float((hi - lo).max()) <= BISECTION_TOL:
            break
    v = 0.5 * (lo + hi)
    return SampleSet(np.column_stack([u, v]), int(seed), model.family.label)


# --------------------------------------------------------------------------
# estimation
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EstimationResult:
    A_hat: np.ndarray
    estimator: str
    n: int
    family: OrthonormalFamily

    @property
    def family_label(self) -> str:
        return self.family.label

    def density(self, u, v) -> np.ndarray:
        """``phi(u)^T A_hat phi(v)``; defined whether or not ``A_hat`` meets the constraints."""
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        return np.einsum("...i,ij,...j->...", self.family.phi(u), self.A_hat, self.family.phi(v))

    def model(self) -> CopulaModel:
        """The implied model; raises :class:`ConstraintViolationError` if ``A_hat`` breaks the e1 constraints."""
        return new_model(self.family, self.A_hat)

    def implied_verdict(self) -> str:
        try:
            model = self.model()
        except ConstraintViolationError:
            return INVALID
        return validate(model).verdict

    def to_dict(self) -> dict:
        return {
            "matrix": self.A_hat.ravel().tolist(),
            "size": self.family.size,
            "family": self.family.descriptor,
            "estimator": self.estimator,
            "n": self.n,
            "verdict": self.implied_verdict(),
        }


def _features(samples: SampleSet, family: OrthonormalFamily) -> tuple[np.ndarray, np.ndarray]:
    if samples.n < 1:
        raise InvalidArgumentError("cannot estimate from an empty sample")
    return family.phi(samples.u), family.phi(samples.v)


def _result(a: np.ndarray, estimator: str, n: int, family: OrthonormalFamily) -> EstimationResult:
    a.setflags(write=False)
    return EstimationResult(a, estimator, n, family)


def estimate_a1(samples: SampleSet, family: OrthonormalFamily) -> EstimationResult:
    """``(1/n) sum phi(U_i) phi(V_i)^T``."""
    fu, fv = _features(samples, family)
    a = fu.T @ fv / samples.n
    a[0, 0] = 1.0
    return _result(a, "a1", samples.n, family)


def estimate_a2(samples: SampleSet, family: OrthonormalFamily) -> EstimationResult:
    """``(1/n) sum (phi(U_i) - e1)(phi(V_i) - e1)^T + e1 e1^T``.

    The first coordinate of ``phi - e1`` vanishes identically, so the first row
    and column of the estimate are exactly ``e1``.
    """
    fu, fv = _features(samples, family)
    fu = fu.copy()
    fv = fv.copy()
    fu[:, 0] = 0.0
    fv[:, 0] = 0.0
    a = fu.T @ fv / samples.n
    a[0, 0] = 1.0
    return _result(a, "a2", samples.n, family)


def estimate(samples: SampleSet, family: OrthonormalFamily, estimator: str) -> EstimationResult:
    if estimator == "a1":
        return estimate_a1(samples, family)
    if estimator == "a2":
        return estimate_a2(samples, family)
    raise InvalidArgumentError(f"unknown estimator {estimator!r}; expected one of {ESTIMATORS}")


def reproducing_kernel(family: OrthonormalFamily, x, y) -> np.ndarray:
    """``q(x, y) = phi(x)^T phi(y)`` for broadcastable ``x`` and ``y``."""
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    return np.einsum("...i,...i->...", family.phi(x), family.phi(y))


def kernel_density_a1(samples: SampleSet, family: OrthonormalFamily, u: float, v: float) -> float:
    """``(1/n) sum q(u, U_i) q(v, V_i)``."""
    return float(np.mean(reproducing_kernel(family, u, samples.u) * reproducing_kernel(family, v, samples.v)))


def kernel_density_a2(samples: SampleSet, family: OrthonormalFamily, u: float, v: float) -> float:
    """``1 + (1/n) sum (q(u, U_i) - 1)(q(v, V_i) - 1)``."""
    qu = reproducing_kernel(family, u, samples.u) - 1.0
    qv = reproducing_kernel(family, v, samples.v) - 1.0
    return float(1.0 + np.mean(qu * qv))


def empirical_spearman(samples: SampleSet) -> float:
    """Rank correlation of the pairs (ties are not expected for continuous draws)."""
    ru = np.argsort(np.argsort(samples.u))
    rv = np.argsort(np.argsort(samples.v))
    return float(np.corrcoef(ru, rv)[0, 1])


# --------------------------------------------------------------------------
# files
# --------------------------------------------------------------------------


def write_samples_csv(samples: SampleSet, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(("u", "v"))
    for u, v in samples.pairs:
        writer.writerow((repr(float(u)), repr(float(v))))


def read_samples_csv(fh, source_label: str = "file") -> SampleSet:
    reader = csv.reader(fh)
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != ["u", "v"]:
        raise InvalidArgumentError(f"sample file must start with the header 'u,v', got {header!r}")
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 2:
            raise InvalidArgumentError(f"sample file line {lineno}: expected 2 fields, got {len(row)}")
        try:
            rows.append((float(row[0]), float(row[1])))
        except ValueError as exc:
            raise InvalidArgumentError(f"sample file line {lineno}: {exc}") from exc
    if not rows:
        raise InvalidArgumentError("sample file has no data rows")
    return SampleSet(np.array(rows), None, source_label)

