"""Structured axisymmetric (r, z) finite-volume mesh with an embedded solid mask.

Conventions:
  - arrays are indexed [i, j] with i along r (or x for planar meshes) and
    j along z;
  - volumes and areas use a one-radian sector, so the global 2*pi factor
    cancels in every balance;
  - the net projection of the two azimuthal wedge faces of each cell is
    stored in ``wedge_area`` (pointing in -r); including it, the signed sum
    of outward face-area vectors of every cell is exactly zero.

Patches: ``axis`` (r=0), ``leftSide`` (r=L), ``inlet`` (z=0), ``outlet``
(z=H) and ``fiber`` (the internal fluid/solid boundary).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)

PATCH_NAMES = ("axis", "leftSide", "inlet", "outlet", "fiber")


def graded_spacing(total: float, n: int, fine_lo: float, fine_hi: float,
                   d_fine: float, ratio: float = 1.1) -> np.ndarray:
    """Cell widths on [0, total]: uniform d_fine inside [fine_lo, fine_hi],
    geometrically stretched (factor <= ratio) outside, rescaled to fit.

    Returns an array of n positive widths summing to total.
    """
    if not (0.0 <= fine_lo < fine_hi <= total):
        raise ValueError("fine region must lie inside [0, total]")
    if ratio < 1.0 or ratio > 1.2:
        raise ValueError("stretch ratio must be in [1.0, 1.2]")
    n_fine = max(2, int(round((fine_hi - fine_lo) / d_fine)))
    widths = [d_fine] * n_fine

    def stretch(length):
        out, w = [], d_fine
        while sum(out) < length:
            w = min(w * ratio, 20 * d_fine)
            out.append(w)
        if out:
            out = list(np.asarray(out) * (length / sum(out)))
        return out

    lo = stretch(fine_lo)[::-1]
    hi = stretch(total - fine_hi)
    widths = lo + widths + hi
    w = np.asarray(widths, dtype=float)
    # resample to exactly n cells preserving the grading shape
    if len(w) != n:
        x = np.concatenate([[0.0], np.cumsum(w)])
        x *= total / x[-1]
        s = np.linspace(0.0, 1.0, len(x))
        xn = np.interp(np.linspace(0.0, 1.0, n + 1), s, x)
        w = np.diff(xn)
    w *= total / w.sum()
    if np.any(w <= 0):
        raise ValueError("graded spacing produced non-positive widths")
    return w


@dataclass
class AxiMesh:
    """Structured finite-volume mesh, axisymmetric or planar (unit depth)."""

    rf: np.ndarray            # face coordinates along r/x, (nr+1,)
    zf: np.ndarray            # face coordinates along z, (nz+1,)
    solid: np.ndarray         # bool (nr, nz), True in the solid fiber
    geometry: str = "axisymmetric"   # or "planar"

    nr: int = field(init=False)
    nz: int = field(init=False)
    rc: np.ndarray = field(init=False)
    zc: np.ndarray = field(init=False)
    dr: np.ndarray = field(init=False)
    dz: np.ndarray = field(init=False)
    vol: np.ndarray = field(init=False)        # (nr, nz)
    area_r: np.ndarray = field(init=False)     # (nr+1, nz) faces normal to r
    area_z: np.ndarray = field(init=False)     # (nr, nz+1) faces normal to z
    wedge_area: np.ndarray = field(init=False)  # (nr, nz), -r projection

    def __post_init__(self):
        self.rf = np.asarray(self.rf, dtype=float)
        self.zf = np.asarray(self.zf, dtype=float)
        if self.geometry not in ("axisymmetric", "planar"):
            raise ValueError(f"unknown geometry {self.geometry!r}")
        self.nr = len(self.rf) - 1
        self.nz = len(self.zf) - 1
        self.dr = np.diff(self.rf)
        self.dz = np.diff(self.zf)
        if np.any(self.dr <= 0) or np.any(self.dz <= 0):
            raise ValueError("face coordinates must be strictly increasing")
        self.rc = 0.5 * (self.rf[:-1] + self.rf[1:])
        self.zc = 0.5 * (self.zf[:-1] + self.zf[1:])
        if self.geometry == "axisymmetric":
            ann = 0.5 * (self.rf[1:] ** 2 - self.rf[:-1] ** 2)  # (nr,)
            self.vol = np.outer(ann, self.dz)
            self.area_r = np.outer(self.rf, self.dz)
            self.area_z = np.repeat(ann[:, None], self.nz + 1, axis=1)
            self.wedge_area = np.outer(self.dr, self.dz)
        else:
            self.vol = np.outer(self.dr, self.dz)
            self.area_r = np.repeat(self.dz[None, :], self.nr + 1, axis=0)
            self.area_z = np.repeat(self.dr[:, None], self.nz + 1, axis=1)
            self.wedge_area = np.zeros((self.nr, self.nz))
        self.solid = np.asarray(self.solid, dtype=bool)
        if self.solid.shape != (self.nr, self.nz):
            raise ValueError("solid mask shape mismatch")
        if np.any(self.vol <= 0):
            raise ValueError("non-positive cell volume")

    # -- derived face/cell helpers ------------------------------------

    @property
    def fluid(self) -> np.ndarray:
        return ~self.solid

    @property
    def n_cells(self) -> int:
        return self.nr * self.nz

    def cell_index(self, i, j):
        return i * self.nz + j

    def fiber_faces(self):
        """Masks of internal faces separating fluid and solid cells.

        Returns (fr, fz): fr has shape (nr+1, nz) and is True on r-faces
        lying on the fluid/solid boundary; fz analogous on z-faces.
        """
        fr = np.zeros((self.nr + 1, self.nz), dtype=bool)
        fz = np.zeros((self.nr, self.nz + 1), dtype=bool)
        s = self.solid
        fr[1:-1, :] = s[:-1, :] != s[1:, :]
        fz[:, 1:-1] = s[:, :-1] != s[:, 1:]
        return fr, fz

    def closedness_error(self) -> float:
        """Max relative magnitude of the signed outward face-area sum."""
        err_r = (self.area_r[1:, :] - self.area_r[:-1, :] - self.wedge_area)
        err_z = self.area_z[:, 1:] - self.area_z[:, :-1]
        scale = np.maximum(self.area_r[1:, :], self.area_z[:, :-1]).max()
        return max(np.abs(err_r).max(), np.abs(err_z).max()) / scale

    def min_spacing(self) -> float:
        return min(self.dr.min(), self.dz.min())

    def dump_vtk(self, path, fields=None):
        """Write the mesh (and optional cell fields) as legacy-VTK
        structured grid, one-cell-thick in the third direction."""
        fields = fields or {}
        nr, nz = self.nr, self.nz
        with open(path, "w") as f:
            f.write("# vtk DataFile Version 3.0\ndropflame frame\nASCII\n")
            f.write("DATASET RECTILINEAR_GRID\n")
            f.write(f"DIMENSIONS {nr + 1} {nz + 1} 1\n")
            f.write(f"X_COORDINATES {nr + 1} double\n")
            f.write(" ".join(f"{v:.9g}" for v in self.rf) + "\n")
            f.write(f"Y_COORDINATES {nz + 1} double\n")
            f.write(" ".join(f"{v:.9g}" for v in self.zf) + "\n")
            f.write("Z_COORDINATES 1 double\n0\n")
            f.write(f"CELL_DATA {nr * nz}\n")
            solid = self.solid.astype(float)
            for name, arr in {"solid": solid, **fields}.items():
                f.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
                # VTK cell ordering: x fastest
                vals = np.asarray(arr, dtype=float).T.ravel()
                f.write("\n".join(f"{v:.9g}" for v in vals) + "\n")


def build_axi_mesh(L: float, H: float, r_fiber: float,
                   nr: int | None = None, nz: int | None = None,
                   dx: float | None = None,
                   droplet_diameter: float | None = None,
                   droplet_center_z: float | None = None,
                   grading: dict | None = None,
                   geometry: str = "axisymmetric") -> AxiMesh:
    """Build the structured mesh for the droplet-on-fiber configuration.

    Either pass (nr, nz) for a uniform grid or dx for a uniform spacing;
    ``grading`` optionally refines around the droplet:
    {"d_fine": .., "ratio": .., "r_fine": .., "z_lo": .., "z_hi": ..}.

    Cells with r < r_fiber are marked Solid. Reports the achieved droplet
    resolution D/dx when droplet_diameter is given.
    """
    if L <= 0 or H <= 0:
        raise ValueError("domain dimensions must be positive")
    if r_fiber < 0 or r_fiber >= L:
        raise ValueError("fiber radius must satisfy 0 <= r_fiber < L")

    if grading:
        g = dict(grading)
        d_fine = g["d_fine"]
        ratio = g.get("ratio", 1.1)
        nr = nr or max(8, int(round(L / d_fine * 0.6)))
        nz = nz or max(8, int(round(H / d_fine * 0.6)))
        wr = graded_spacing(L, nr, 0.0, g.get("r_fine", L / 3), d_fine, ratio)
        wz = graded_spacing(H, nz, g.get("z_lo", H / 3), g.get("z_hi", 2 * H / 3),
                            d_fine, ratio)
        rf = np.concatenate([[0.0], np.cumsum(wr)])
        zf = np.concatenate([[0.0], np.cumsum(wz)])
    else:
        if dx is not None:
            nr = int(round(L / dx))
            nz = int(round(H / dx))
        if nr is None or nz is None:
            raise ValueError("pass (nr, nz), dx, or a grading spec")
        rf = np.linspace(0.0, L, nr + 1)
        zf = np.linspace(0.0, H, nz + 1)

    rc = 0.5 * (rf[:-1] + rf[1:])
    solid = np.zeros((len(rf) - 1, len(zf) - 1), dtype=bool)
    if r_fiber > 0.0:
        solid[rc < r_fiber, :] = True
    mesh = AxiMesh(rf=rf, zf=zf, solid=solid, geometry=geometry)

    if droplet_diameter:
        res = droplet_diameter / mesh.min_spacing()
        logger.info("mesh %dx%d, droplet resolution D/dx = %.1f",
                    mesh.nr, mesh.nz, res)
        if res < 8:
            raise ValueError(
                f"refinement gives only {res:.1f} cells across the droplet "
                "(need >= 8)")
    return mesh
