"""Single-field momentum and pressure-velocity coupling.

One velocity field spans gas and liquid; properties are marker-blended.
The pressure variable is p_rgh = p - rho g.x, so gravity enters the
momentum balance as -(g.x) grad(rho). Each outer iteration runs an
implicit momentum predictor without pressure/body forces, adds the
body forces on faces, and projects the face velocities onto the target
divergence

    div(v) = mdot (1/rho_L - 1/rho_G),

the volume source created by phase change (evaporating liquid expands
into gas). Evaluating the body force and the pressure gradient on the
same faces keeps a motionless stratified column exactly motionless
(well-balanced), and reconstructing the cell-velocity correction from
the face corrections preserves that balance cell-wise.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from .fields import default_bcs
from .operators import assemble_fv, face_values_r, face_values_z

logger = logging.getLogger(__name__)

MAX_OUTER = 50
OUTER_TOL = 1e-6


class OuterIterationError(RuntimeError):
    """Pressure-velocity coupling failed to converge; halve dt."""


@dataclass
class FlowState:
    ur: np.ndarray
    uz: np.ndarray
    p_rgh: np.ndarray
    phi_r: np.ndarray = None   # face volume fluxes [m^3/s], (nr+1, nz)
    phi_z: np.ndarray = None   # (nr, nz+1)

    def __post_init__(self):
        nr, nz = self.ur.shape
        if self.phi_r is None:
            self.phi_r = np.zeros((nr + 1, nz))
        if self.phi_z is None:
            self.phi_z = np.zeros((nr, nz + 1))


def default_velocity_bcs():
    """(bcs_ur, bcs_uz): no-penetration axis/walls, open top outlet."""
    bcs_ur = {"axis": ("fixed", 0.0), "leftSide": ("fixed", 0.0),
              "inlet": ("zero_gradient",), "outlet": ("zero_gradient",)}
    bcs_uz = {"axis": ("symmetry",), "leftSide": ("zero_gradient",),
              "inlet": ("fixed", 0.0), "outlet": ("zero_gradient",)}
    return bcs_ur, bcs_uz


def adaptive_dt(mesh, ur, uz, dt_max, co=0.5):
    """Courant-limited time step: co * min over faces of width/|v|."""
    vr = np.max(np.abs(ur), initial=0.0)
    vz = np.max(np.abs(uz), initial=0.0)
    dt = dt_max
    if vr > 0:
        dt = min(dt, co * mesh.dr.min() / vr)
    if vz > 0:
        dt = min(dt, co * mesh.dz.min() / vz)
    return dt


def suspension_force(mesh, alpha, anchor, c_m, rho_l):
    """Spring-like body force density [N/m^3] pulling liquid toward the
    anchor point (r_a, z_a) on the fiber; zero where no liquid."""
    r_a, z_a = anchor
    dr_ = r_a - mesh.rc[:, None]
    dz_ = z_a - mesh.zc[None, :]
    dist = np.hypot(dr_, dz_)
    safe = np.where(dist > 0, dist, 1.0)
    mag = c_m * rho_l * np.asarray(alpha)
    fr = np.where(dist > 0, mag * dr_ / safe, 0.0)
    fz = np.where(dist > 0, mag * dz_ / safe, 0.0)
    return fr, fz


def _boundary_face_velocity(bc, cell_vals, wall_normal):
    """Outer-patch face velocity for flux assembly. For the
    wall-normal component a symmetry/zero-gradient patch is treated as
    impermeable."""
    kind = bc[0]
    if kind == "fixed":
        return np.broadcast_to(np.asarray(bc[1], dtype=float),
                               cell_vals.shape).copy()
    if wall_normal:
        return cell_vals.copy()       # open: outflow carries cell value
    return cell_vals.copy()


def face_fluxes(mesh, ur, uz, bcs_ur, bcs_uz, open_patches=()):
    """Volume fluxes through faces from linearly interpolated cell
    velocities; fiber and closed outer faces carry zero flux."""
    ur_f = face_values_r(mesh, ur, bcs_ur)
    uz_f = face_values_z(mesh, uz, bcs_uz)
    phi_r = ur_f * mesh.area_r
    phi_z = uz_f * mesh.area_z
    fr, fz = mesh.fiber_faces()
    phi_r[fr] = 0.0
    phi_z[fz] = 0.0
    # closed outer patches: no normal flux unless the patch is open or
    # the bc fixes a nonzero velocity
    if "axis" not in open_patches and bcs_ur["axis"][0] != "fixed":
        phi_r[0, :] = 0.0
    if "leftSide" not in open_patches and bcs_ur["leftSide"][0] != "fixed":
        phi_r[-1, :] = 0.0
    if "inlet" not in open_patches and bcs_uz["inlet"][0] != "fixed":
        phi_z[:, 0] = 0.0
    if "outlet" not in open_patches and bcs_uz["outlet"][0] != "fixed":
        phi_z[:, -1] = 0.0
    solid_r = np.zeros_like(phi_r, dtype=bool)
    solid_r[:-1] |= mesh.solid
    solid_r[1:] |= mesh.solid
    phi_r[solid_r] = 0.0
    solid_z = np.zeros_like(phi_z, dtype=bool)
    solid_z[:, :-1] |= mesh.solid
    solid_z[:, 1:] |= mesh.solid
    phi_z[solid_z] = 0.0
    return phi_r, phi_z


def _face_masks(mesh, open_patches):
    """Interior-fluid r/z face masks where corrections may act."""
    fluid = ~mesh.solid
    live_r = np.zeros((mesh.nr + 1, mesh.nz), dtype=bool)
    live_r[1:-1] = fluid[:-1] & fluid[1:]
    live_z = np.zeros((mesh.nr, mesh.nz + 1), dtype=bool)
    live_z[:, 1:-1] = fluid[:, :-1] & fluid[:, 1:]
    if "outlet" in open_patches:
        live_z[:, -1] = fluid[:, -1]
    if "inlet" in open_patches:
        live_z[:, 0] = fluid[:, 0]
    if "leftSide" in open_patches:
        live_r[-1, :] = fluid[-1, :]
    return live_r, live_z


def solve_momentum(mesh, state, rho, mu, Fr, Fz, f_r, f_z, dt,
                   bcs_ur, bcs_uz):
    """Implicit momentum predictor (advection + diffusion + explicit
    body force); pressure is applied in the projection."""
    fluid = ~mesh.solid
    out = []
    axisym = mesh.geometry == "axisymmetric"
    for comp, (u0, bcs, f_b) in enumerate(
            [(state.ur, bcs_ur, f_r), (state.uz, bcs_uz, f_z)]):
        rhs = rho * mesh.vol * u0 / dt
        if f_b is not None:
            rhs = rhs + f_b * mesh.vol
        diag_extra = None
        if comp == 0 and axisym:
            # hoop term of the axisymmetric vector Laplacian
            diag_extra = mu * mesh.vol / np.maximum(
                mesh.rc[:, None] ** 2, 1e-300)
        A, b, _ = assemble_fv(mesh, dt_coeff=rho * mesh.vol / dt,
                              Fr=Fr, Fz=Fz, gamma=mu, bcs=bcs, rhs=rhs,
                              active=fluid, inactive_value=0.0,
                              diag_extra=diag_extra)
        sol = spsolve(A.tocsc(), b).reshape(u0.shape)
        res = np.linalg.norm(A @ sol.ravel() - b)
        scale = max(np.linalg.norm(b), 1e-300)
        if res / scale > 1e-8:
            logger.warning("momentum solve residual %.2e", res / scale)
        out.append(np.where(fluid, sol, 0.0))
    return out[0], out[1]


def _body_force_faces(mesh, rho, grav, f_r, f_z, bcs_rho):
    """Face-normal body-force density: buoyancy -(g.x) d(rho)/dn plus
    the interpolated explicit force."""
    g_dot_x_r = grav[0] * mesh.rf[:, None] + \
        grav[1] * 0.5 * (mesh.zf[:-1] + mesh.zf[1:])[None, :]
    g_dot_x_z = grav[0] * 0.5 * (mesh.rf[:-1] + mesh.rf[1:])[:, None] + \
        grav[1] * mesh.zf[None, :]
    b_r = np.zeros((mesh.nr + 1, mesh.nz))
    b_z = np.zeros((mesh.nr, mesh.nz + 1))
    drho_r = (rho[1:, :] - rho[:-1, :]) / \
        (mesh.rc[1:] - mesh.rc[:-1])[:, None]
    drho_z = (rho[:, 1:] - rho[:, :-1]) / \
        (mesh.zc[1:] - mesh.zc[:-1])[None, :]
    b_r[1:-1] = -g_dot_x_r[1:-1] * drho_r
    b_z[:, 1:-1] = -g_dot_x_z[:, 1:-1] * drho_z
    if f_r is not None:
        b_r[1:-1] += 0.5 * (f_r[:-1] + f_r[1:])
        b_z[:, 1:-1] += 0.5 * (f_z[:, :-1] + f_z[:, 1:])
    return b_r, b_z


def pressure_correction(mesh, state, rho, continuity_rhs, dt, grav=None,
                        f_r=None, f_z=None, bcs_ur=None, bcs_uz=None,
                        open_patches=("outlet",), p_tol=1e-9):
    """Project interpolated face velocities onto the prescribed
    divergence; returns (state, max cell continuity residual [1/s]).

    continuity_rhs: target div(v) per cell [1/s] (phase-change volume
    source). Pressure is anchored by fixing p_rgh = 0 on open patches;
    with no open patch the mean is pinned and the source must be
    globally compatible.
    """
    bcs_ur = bcs_ur or default_velocity_bcs()[0]
    bcs_uz = bcs_uz or default_velocity_bcs()[1]
    fluid = ~mesh.solid
    phi_r, phi_z = face_fluxes(mesh, state.ur, state.uz, bcs_ur, bcs_uz,
                               open_patches)
    rho_f_r = face_values_r(mesh, rho, {"axis": ("zero_gradient",),
                                        "leftSide": ("zero_gradient",),
                                        "inlet": ("zero_gradient",),
                                        "outlet": ("zero_gradient",)})
    rho_f_z = face_values_z(mesh, rho, {"axis": ("zero_gradient",),
                                        "leftSide": ("zero_gradient",),
                                        "inlet": ("zero_gradient",),
                                        "outlet": ("zero_gradient",)})
    live_r, live_z = _face_masks(mesh, open_patches)

    if grav is not None or f_r is not None:
        g = grav if grav is not None else (0.0, 0.0)
        b_r, b_z = _body_force_faces(mesh, rho, g, f_r, f_z, None)
        phi_r = phi_r + np.where(live_r, dt / rho_f_r * b_r *
                                 mesh.area_r, 0.0)
        phi_z = phi_z + np.where(live_z, dt / rho_f_z * b_z *
                                 mesh.area_z, 0.0)

    # assemble the variable-coefficient Poisson system for p_rgh
    nr, nz = mesh.nr, mesh.nz
    n = nr * nz
    idx = np.arange(n).reshape(nr, nz)
    diag = np.zeros((nr, nz))
    rhs = (np.asarray(continuity_rhs) * mesh.vol) if continuity_rhs \
        is not None else np.zeros((nr, nz))
    rhs = rhs - (phi_r[1:] - phi_r[:-1] + phi_z[:, 1:] - phi_z[:, :-1])
    rows, cols, vals = [], [], []

    # interior r faces
    cr = dt / rho_f_r[1:-1] * mesh.area_r[1:-1] / \
        (mesh.rc[1:] - mesh.rc[:-1])[:, None]
    cr = np.where(live_r[1:-1], cr, 0.0)
    diag[:-1] += cr
    diag[1:] += cr
    ii, jj = np.meshgrid(np.arange(nr - 1), np.arange(nz),
                         indexing="ij")
    rows += [idx[ii, jj].ravel(), idx[ii + 1, jj].ravel()]
    cols += [idx[ii + 1, jj].ravel(), idx[ii, jj].ravel()]
    vals += [-cr.ravel(), -cr.ravel()]
    # interior z faces
    cz = dt / rho_f_z[:, 1:-1] * mesh.area_z[:, 1:-1] / \
        (mesh.zc[1:] - mesh.zc[:-1])[None, :]
    cz = np.where(live_z[:, 1:-1], cz, 0.0)
    diag[:, :-1] += cz
    diag[:, 1:] += cz
    ii, jj = np.meshgrid(np.arange(nr), np.arange(nz - 1),
                         indexing="ij")
    rows += [idx[ii, jj].ravel(), idx[ii, jj + 1].ravel()]
    cols += [idx[ii, jj + 1].ravel(), idx[ii, jj].ravel()]
    vals += [-cz.ravel(), -cz.ravel()]
    # open boundary faces: p_rgh = 0 on the face
    bc_terms = []
    if "outlet" in open_patches:
        c_out = dt / rho_f_z[:, -1] * mesh.area_z[:, -1] / \
            (mesh.zf[-1] - mesh.zc[-1])
        c_out = np.where(live_z[:, -1], c_out, 0.0)
        diag[:, -1] += c_out
        bc_terms.append(("z_hi", c_out))
    if "inlet" in open_patches:
        c_in = dt / rho_f_z[:, 0] * mesh.area_z[:, 0] / \
            (mesh.zc[0] - mesh.zf[0])
        c_in = np.where(live_z[:, 0], c_in, 0.0)
        diag[:, 0] += c_in
        bc_terms.append(("z_lo", c_in))
    if "leftSide" in open_patches:
        c_ls = dt / rho_f_r[-1] * mesh.area_r[-1] / \
            (mesh.rf[-1] - mesh.rc[-1])
        c_ls = np.where(live_r[-1], c_ls, 0.0)
        diag[-1, :] += c_ls
        bc_terms.append(("r_hi", c_ls))

    pinned = ~fluid
    if not bc_terms:
        # all-Neumann: pin the first fluid cell
        i0 = np.flatnonzero(fluid.ravel())[0]
        pin_mask = np.zeros(n, dtype=bool)
        pin_mask[i0] = True
        pinned = pinned | pin_mask.reshape(nr, nz)
    diag[pinned] = np.where(diag[pinned] > 0, diag[pinned], 1.0)
    rhs = np.where(pinned, 0.0, rhs)

    rows.append(idx.ravel())
    cols.append(idx.ravel())
    vals.append(diag.ravel())
    rows_c = np.concatenate(rows)
    cols_c = np.concatenate(cols)
    vals_c = np.concatenate(vals)
    keep = ~(pinned.ravel()[rows_c] & (rows_c != cols_c))
    keep &= ~(pinned.ravel()[cols_c] & (rows_c != cols_c))
    A = sp.csr_matrix((vals_c[keep], (rows_c[keep], cols_c[keep])),
                      shape=(n, n))
    p = spsolve(A.tocsc(), rhs.ravel()).reshape(nr, nz)

    # face corrections
    dp_r = np.zeros((nr + 1, nz))
    dp_z = np.zeros((nr, nz + 1))
    dp_r[1:-1] = (p[1:] - p[:-1]) / (mesh.rc[1:] - mesh.rc[:-1])[:, None]
    dp_z[:, 1:-1] = (p[:, 1:] - p[:, :-1]) / \
        (mesh.zc[1:] - mesh.zc[:-1])[None, :]
    if "outlet" in open_patches:
        dp_z[:, -1] = (0.0 - p[:, -1]) / (mesh.zf[-1] - mesh.zc[-1])
    if "inlet" in open_patches:
        dp_z[:, 0] = (p[:, 0] - 0.0) / (mesh.zc[0] - mesh.zf[0])
    if "leftSide" in open_patches:
        dp_r[-1, :] = (0.0 - p[-1, :]) / (mesh.rf[-1] - mesh.rc[-1])
    corr_r = np.where(live_r, -dt / rho_f_r * dp_r, 0.0)
    corr_z = np.where(live_z, -dt / rho_f_z * dp_z, 0.0)
    phi_r = phi_r + corr_r * mesh.area_r
    phi_z = phi_z + corr_z * mesh.area_z

    # cell velocity update from the face corrections (body force +
    # pressure), averaged back to centers: keeps hydrostatic columns
    # exactly quiescent
    if grav is not None or f_r is not None:
        corr_r = corr_r + np.where(live_r, dt / rho_f_r * b_r, 0.0)
        corr_z = corr_z + np.where(live_z, dt / rho_f_z * b_z, 0.0)
    ur = state.ur + 0.5 * (corr_r[:-1] + corr_r[1:])
    uz = state.uz + 0.5 * (corr_z[:, :-1] + corr_z[:, 1:])
    ur = np.where(fluid, ur, 0.0)
    uz = np.where(fluid, uz, 0.0)

    div = (phi_r[1:] - phi_r[:-1] + phi_z[:, 1:] - phi_z[:, :-1]) / \
        mesh.vol
    target = np.zeros((nr, nz)) if continuity_rhs is None else \
        np.asarray(continuity_rhs)
    resid = float(np.max(np.abs(np.where(fluid, div - target, 0.0))))
    new = FlowState(ur=ur, uz=uz, p_rgh=p, phi_r=phi_r, phi_z=phi_z)
    return new, resid


def flow_step(mesh, state, rho, mu, dt, continuity_rhs=None, grav=None,
              f_r=None, f_z=None, bcs_ur=None, bcs_uz=None,
              open_patches=("outlet",), tol=OUTER_TOL,
              max_outer=MAX_OUTER, residual_log=None):
    """One time step of the coupled momentum/pressure system with outer
    iterations to tolerance; raises OuterIterationError on failure."""
    bcs_ur = bcs_ur or default_velocity_bcs()[0]
    bcs_uz = bcs_uz or default_velocity_bcs()[1]
    prev_ur, prev_uz = state.ur, state.uz
    rho_f_r = face_values_r(mesh, rho, {k: ("zero_gradient",) for k in
                                        ("axis", "leftSide", "inlet",
                                         "outlet")})
    rho_f_z = face_values_z(mesh, rho, {k: ("zero_gradient",) for k in
                                        ("axis", "leftSide", "inlet",
                                         "outlet")})
    cur = state
    for it in range(max_outer):
        Fr = cur.phi_r * rho_f_r
        Fz = cur.phi_z * rho_f_z
        ur_s, uz_s = solve_momentum(
            mesh, FlowState(prev_ur, prev_uz, cur.p_rgh, cur.phi_r,
                            cur.phi_z),
            rho, mu, Fr, Fz, None, None, dt, bcs_ur, bcs_uz)
        cur, resid = pressure_correction(
            mesh, FlowState(ur_s, uz_s, cur.p_rgh), rho,
            continuity_rhs, dt, grav=grav, f_r=f_r, f_z=f_z,
            bcs_ur=bcs_ur, bcs_uz=bcs_uz, open_patches=open_patches)
        if residual_log is not None:
            residual_log.append((it, resid))
        if resid < tol:
            return cur, resid
    raise OuterIterationError(
        f"pressure-velocity coupling: residual {resid:.3e} after "
        f"{max_outer} outer iterations")
