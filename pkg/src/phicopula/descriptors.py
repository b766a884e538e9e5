"""Family descriptors: ``{"kind", "size", "parameters"}`` objects and ``"haar:8"`` strings."""

from __future__ import annotations

from functools import lru_cache

from .basis import (
    OrthonormalFamily,
    cubic_section_raw_family,
    iterated_fgm_raw_family,
    make_fgm_family,
    make_haar_family,
    make_trig_family,
    orthonormalize,
)
from .errors import InvalidArgumentError
from .partition import make_partition

FAMILY_KINDS = ("trig", "haar", "fgm", "checkerboard", "bernstein", "cubic", "iterated_fgm")


def _haar_levels(size: int) -> int:
    if size < 1 or size & (size - 1):
        raise InvalidArgumentError(f"Haar family size must be a power of 2, got {size}")
    return size.bit_length() - 1


@lru_cache(maxsize=128)
def _build(kind: str, size: int, params: tuple) -> OrthonormalFamily:
    params = dict(params)
    if kind == "trig":
        harmonics = int(params.get("harmonics", (size - 1) // 2))
        fam = make_trig_family(harmonics)
    elif kind == "haar":
        fam = make_haar_family(int(params.get("levels", _haar_levels(size))))
    elif kind == "fgm":
        fam = make_fgm_family()
    elif kind in ("checkerboard", "bernstein"):
        fam, _ = make_partition(kind, size).orthonormal
    elif kind == "cubic":
        fam, _ = orthonormalize(cubic_section_raw_family())
    elif kind == "iterated_fgm":
        fam, _ = orthonormalize(iterated_fgm_raw_family(int(params.get("terms", size - 1))))
    else:
        raise InvalidArgumentError(f"unknown family kind {kind!r}; expected one of {FAMILY_KINDS}")
    if fam.size != size:
        raise InvalidArgumentError(f"descriptor size {size} does not match {kind} family of size {fam.size}")
    return fam


def family_from_descriptor(d: dict) -> OrthonormalFamily:
    """Rebuild a family from its JSON descriptor."""
    for key in ("kind", "size"):
        if key not in d:
            raise InvalidArgumentError(f"family descriptor is missing field {key!r}")
    params = d.get("parameters") or {}
    if not isinstance(params, dict):
        raise InvalidArgumentError("family descriptor field 'parameters' must be an object")
    try:
        size = int(d["size"])
    except (TypeError, ValueError) as exc:
        raise InvalidArgumentError("family descriptor field 'size' must be an integer") from exc
    return _build(str(d["kind"]), size, tuple(sorted(params.items())))


def family_for_size(kind: str, size: int) -> OrthonormalFamily:
    """Family of a given kind with ``size`` functions (trig sizes are odd: 2h + 1)."""
    kind = kind.lower()
    if kind == "trig":
        if size < 3 or size % 2 == 0:
            raise InvalidArgumentError(f"trigonometric family sizes are odd and >= 3, got {size}")
        return _build("trig", size, (("harmonics", (size - 1) // 2),))
    if kind == "haar":
        return _build("haar", size, (("levels", _haar_levels(size)),))
    if kind == "iterated_fgm":
        return _build(kind, size, (("terms", size - 1),))
    return _build(kind, size, ())


def parse_family(text: str, harmonics: int | None = None, size: int | None = None) -> OrthonormalFamily:
    """Parse ``"trig:2"`` (harmonics), ``"haar:8"`` / ``"bernstein:16"`` (size), ``"fgm"``, ``"cubic"``.

    ``harmonics`` / ``size`` supply the number when the string has none.
    """
    kind, _, value = text.strip().lower().partition(":")
    if kind not in FAMILY_KINDS:
        raise InvalidArgumentError(f"unknown family kind {kind!r}; expected one of {FAMILY_KINDS}")
    if kind == "fgm":
        return make_fgm_family_cached()
    if kind == "cubic":
        return _build("cubic", 3, ())
    try:
        number = int(value) if value else None
    except ValueError as exc:
        raise InvalidArgumentError(f"bad number in family descriptor {text!r}") from exc
    if kind == "trig":
        h = number if number is not None else harmonics
        if h is None:
            raise InvalidArgumentError("trig family needs a number of harmonics, e.g. 'trig:2'")
        return family_for_size("trig", 2 * int(h) + 1)
    n = number if number is not None else size
    if n is None:
        raise InvalidArgumentError(f"{kind} family needs a size, e.g. '{kind}:8'")
    return family_for_size(kind, int(n))


def make_fgm_family_cached() -> OrthonormalFamily:
    return _build("fgm", 2, ())
