"""Model files (JSON) and grid exports (CSV)."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .copula import CopulaModel, ValidationReport, new_model
from .descriptors import family_from_descriptor
from .errors import CopulaError, InvalidArgumentError


def model_to_dict(model: CopulaModel) -> dict:
    return {
        "family": model.family.descriptor,
        "matrix": model.matrix.ravel().tolist(),
        "validation": model.validation.to_dict() if model.validation else None,
    }


def parse_matrix(value, p: int | None = None, field: str = "matrix") -> np.ndarray:
    """Square matrix from a nested list or a row-major flat list of ``p*p`` numbers."""
    try:
        a = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InvalidArgumentError(f"field {field!r} must contain only numbers") from exc
    if a.ndim == 1:
        side = int(round(np.sqrt(a.size)))
        if side * side != a.size or a.size == 0:
            raise InvalidArgumentError(f"field {field!r} has {a.size} entries, which is not a square number")
        a = a.reshape(side, side)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidArgumentError(f"field {field!r} must be a square matrix, got shape {a.shape}")
    if p is not None and a.shape[0] != p:
        raise InvalidArgumentError(f"field {field!r} must be {p}x{p} for this family, got {a.shape}")
    return a


def model_from_dict(d) -> CopulaModel:
    if not isinstance(d, dict):
        raise InvalidArgumentError("model file must hold a JSON object")
    for key in ("family", "matrix"):
        if key not in d:
            raise InvalidArgumentError(f"model file is missing field {key!r}")
    if not isinstance(d["family"], dict):
        raise InvalidArgumentError("field 'family' must be a descriptor object")
    family = family_from_descriptor(d["family"])
    model = new_model(family, parse_matrix(d["matrix"], family.size))
    report = d.get("validation")
    if report is not None:
        try:
            model = model.with_validation(ValidationReport.from_dict(report))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidArgumentError(f"field 'validation' is malformed: {exc}") from exc
    return model


def save_model(model: CopulaModel, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=2) + "\n", encoding="utf-8")


def load_model(path) -> CopulaModel:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InvalidArgumentError(f"cannot read model file {path}: {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidArgumentError(f"model file {path} is not valid JSON: {exc}") from exc
    try:
        return model_from_dict(data)
    except CopulaError as exc:
        raise type(exc)(f"{path}: {exc}") from exc


def grid_points(resolution: int) -> np.ndarray:
    if int(resolution) != resolution or resolution < 2:
        raise InvalidArgumentError(f"grid resolution must be an integer >= 2, got {resolution!r}")
    return np.linspace(0.0, 1.0, int(resolution))


def write_grid_csv(model: CopulaModel, resolution: int, fh, what: str = "density") -> None:
    """Write ``u,v,value`` rows, ``u`` outer and ``v`` inner, over a uniform grid."""
    x = grid_points(resolution)
    if what == "density":
        values = model.density_grid(x, x)
    elif what == "cdf":
        values = model.cdf_grid(x, x)
    else:
        raise InvalidArgumentError(f"unknown grid quantity {what!r}; expected 'density' or 'cdf'")
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(("u", "v", "value"))
    for i, u in enumerate(x):
        for j, v in enumerate(x):
            writer.writerow((repr(float(u)), repr(float(v)), repr(float(values[i, j]))))
