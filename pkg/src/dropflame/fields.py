"""Thin field containers: per-cell values plus boundary-condition specs.

A boundary condition is a tuple: ("fixed", value), ("zero_gradient",) or
("symmetry",). ``value`` may be a scalar or an array matching the patch
length. Patch keys: axis, leftSide, inlet, outlet.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ZERO_GRADIENT = ("zero_gradient",)
SYMMETRY = ("symmetry",)


def fixed(value) -> tuple:
    return ("fixed", value)


def default_bcs() -> dict:
    return {"axis": SYMMETRY, "leftSide": ZERO_GRADIENT,
            "inlet": ZERO_GRADIENT, "outlet": ZERO_GRADIENT}


@dataclass
class ScalarField:
    values: np.ndarray
    unit: str = ""
    bcs: dict = field(default_factory=default_bcs)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)

    def check_finite(self, name="field"):
        if not np.all(np.isfinite(self.values)):
            raise FloatingPointError(f"non-finite entries in {name}")

    def copy(self):
        return ScalarField(self.values.copy(), self.unit, dict(self.bcs))


@dataclass
class VectorField:
    vr: np.ndarray
    vz: np.ndarray
    unit: str = ""
    bcs: dict = field(default_factory=default_bcs)

    def __post_init__(self):
        self.vr = np.asarray(self.vr, dtype=float)
        self.vz = np.asarray(self.vz, dtype=float)

    def magnitude(self):
        return np.hypot(self.vr, self.vz)

    def copy(self):
        return VectorField(self.vr.copy(), self.vz.copy(), self.unit,
                           dict(self.bcs))


def boundary_value(bc, inside: np.ndarray) -> np.ndarray:
    """Face value on an outer patch given the first interior cell row."""
    kind = bc[0]
    if kind == "fixed":
        return np.broadcast_to(np.asarray(bc[1], dtype=float),
                               inside.shape).copy()
    if kind in ("zero_gradient", "symmetry"):
        return inside.copy()
    raise ValueError(f"unknown boundary condition {bc!r}")
