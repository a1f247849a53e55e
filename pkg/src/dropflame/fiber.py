"""Conjugate heat transfer with the solid support fiber.

The solid region is the mesh's embedded fiber; its conduction equation
is advanced with implicit Euler on the same grid using the shared
finite-volume assembly, with per-face Dirichlet interface temperatures
where solid meets fluid. The interface temperature of each coupled face
pair enforces flux continuity,

    k_f (T_f - T_if) / delta_f = k_s (T_if - T_s) / delta_s,

and the partitioned fluid/solid solves are iterated with
under-relaxation until the interface flux mismatch is negligible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import spsolve

from .fields import ZERO_GRADIENT
from .mesh import AxiMesh
from .operators import assemble_fv


@dataclass
class SolidRegion:
    """Solid fiber material state."""

    rho: float = 2200.0       # quartz defaults, configurable
    cp: float = 740.0
    k: float = 1.4
    emissivity: float = 0.93
    adiabatic: bool = False   # decouple from the fluid entirely

    def __post_init__(self):
        if min(self.rho, self.cp, self.k) <= 0:
            raise ValueError("solid properties must be positive")


def interface_temperature(t_fluid, t_solid, k_fluid, k_solid,
                          delta_fluid, delta_solid):
    """Flux-continuous interface temperature between two half-cells."""
    g_f = np.asarray(k_fluid) / np.asarray(delta_fluid)
    g_s = np.asarray(k_solid) / np.asarray(delta_solid)
    total = g_f + g_s
    if np.any(total <= 0):
        raise ValueError("zero conductivity on both sides of interface")
    return (g_f * np.asarray(t_fluid) + g_s * np.asarray(t_solid)) / total


def coupled_boundary(mesh: AxiMesh, t_fluid, t_solid, k_fluid, solid:
                     SolidRegion, relax=1.0, t_if_prev=None):
    """Interface temperatures and fluxes on every fiber face.

    Returns dict with per-face arrays on the r/z face grids:
    ``t_if_r``/``t_if_z`` (NaN off the fiber patch) and the two-sided
    fluxes ``flux_r``/``flux_z`` (W/m^2, positive fluid -> solid), plus
    the max |mismatch| between the two one-sided fluxes (identically
    zero up to round-off by construction).
    """
    fr, fz = mesh.fiber_faces()
    t_if_r = np.full(fr.shape, np.nan)
    t_if_z = np.full(fz.shape, np.nan)
    flux_r = np.zeros(fr.shape)
    flux_z = np.zeros(fz.shape)
    k_fluid = np.broadcast_to(np.asarray(k_fluid, dtype=float),
                              t_fluid.shape)
    mismatch = 0.0

    ii, jj = np.nonzero(fr)
    if ii.size:
        # r-face between cells (i-1, j) and (i, j); solid on either side
        solid_lo = mesh.solid[np.maximum(ii - 1, 0), jj] & (ii > 0)
        i_s = np.where(solid_lo, ii - 1, ii)
        i_f = np.where(solid_lo, ii, ii - 1)
        d_s = 0.5 * mesh.dr[i_s]
        d_f = 0.5 * mesh.dr[i_f]
        tf, ts = t_fluid[i_f, jj], t_solid[i_s, jj]
        t_if = interface_temperature(tf, ts, k_fluid[i_f, jj], solid.k,
                                     d_f, d_s)
        if t_if_prev is not None and relax < 1.0:
            prev = t_if_prev["t_if_r"][ii, jj]
            t_if = np.where(np.isfinite(prev),
                            relax * t_if + (1 - relax) * prev, t_if)
        t_if_r[ii, jj] = t_if
        q_f = k_fluid[i_f, jj] * (tf - t_if) / d_f
        q_s = solid.k * (t_if - ts) / d_s
        flux_r[ii, jj] = q_f
        mismatch = max(mismatch, float(np.max(np.abs(q_f - q_s),
                                              initial=0.0)))

    ii, jj = np.nonzero(fz)
    if ii.size:
        # z-face: solid may be on either side
        solid_lo = mesh.solid[ii, np.maximum(jj - 1, 0)] & (jj > 0)
        j_s = np.where(solid_lo, jj - 1, jj)
        j_f = np.where(solid_lo, jj, jj - 1)
        d_s = 0.5 * mesh.dz[j_s]
        d_f = 0.5 * mesh.dz[j_f]
        tf, ts = t_fluid[ii, j_f], t_solid[ii, j_s]
        t_if = interface_temperature(tf, ts, k_fluid[ii, j_f], solid.k,
                                     d_f, d_s)
        if t_if_prev is not None and relax < 1.0:
            prev = t_if_prev["t_if_z"][ii, jj]
            t_if = np.where(np.isfinite(prev),
                            relax * t_if + (1 - relax) * prev, t_if)
        t_if_z[ii, jj] = t_if
        flux_z[ii, jj] = k_fluid[ii, j_f] * (tf - t_if) / d_f
        q_s = solid.k * (t_if - ts) / d_s
        mismatch = max(mismatch, float(np.max(
            np.abs(flux_z[ii, jj] - q_s), initial=0.0)))

    return {"t_if_r": t_if_r, "t_if_z": t_if_z, "flux_r": flux_r,
            "flux_z": flux_z, "mismatch": mismatch}


def solve_solid_temperature(mesh: AxiMesh, t_solid, solid: SolidRegion,
                            dt, *, iface_r=None, iface_z=None,
                            q_rad=None, end_bcs=None):
    """One implicit-Euler conduction step on the solid cells.

    ``iface_r``/``iface_z`` hold Dirichlet interface temperatures on the
    fluid-solid faces (NaN elsewhere); None means those faces are
    adiabatic. ``q_rad`` is a volumetric sink [W/m^3]. ``end_bcs``
    overrides the outer-patch boundary conditions (default insulated).
    Returns the new solid temperature field (fluid cells unchanged).
    """
    t_solid = np.asarray(t_solid, dtype=float)
    if not mesh.solid.any():
        return t_solid.copy()
    bcs = {"axis": ("symmetry",), "leftSide": ZERO_GRADIENT,
           "inlet": ZERO_GRADIENT, "outlet": ZERO_GRADIENT}
    if end_bcs:
        bcs.update(end_bcs)
    if iface_r is not None:
        iface_r = np.nan_to_num(iface_r, nan=0.0)
    if iface_z is not None:
        iface_z = np.nan_to_num(iface_z, nan=0.0)
    rho_cp = solid.rho * solid.cp
    rhs = rho_cp * mesh.vol * t_solid / dt
    if q_rad is not None:
        rhs = rhs - np.asarray(q_rad) * mesh.vol
    A, b, _ = assemble_fv(mesh, dt_coeff=rho_cp * mesh.vol / dt,
                          Fr=None, Fz=None,
                          gamma=np.full(t_solid.shape, solid.k),
                          bcs=bcs, rhs=rhs, active=mesh.solid,
                          inactive_value=t_solid,
                          iface_r=iface_r, iface_z=iface_z)
    out = spsolve(A.tocsc(), b).reshape(t_solid.shape)
    return np.where(mesh.solid, out, t_solid)
