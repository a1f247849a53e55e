"""Discrete finite-volume operators on AxiMesh: interpolation, gradient,
divergence and a generic implicit advection-diffusion assembler.

All assembled systems are volume-integrated: a row of (A, b) represents

    diag-terms * f_P  - sum_f  a_N f_N  = b_P     [W, kg/s, ... per cell]

with upwind advection written in continuity-subtracted form (uniform
fields are exact fixed points even when the face fluxes do not balance)
and two-point diffusion fluxes with harmonic face coefficients.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .fields import boundary_value

# patches on the outer rectangle: (axis low-r, leftSide high-r,
#                                  inlet low-z, outlet high-z)


def face_interp_weights(coords_c, coords_f):
    """Linear interpolation weight of the high-side cell on interior faces."""
    return (coords_f[1:-1] - coords_c[:-1]) / (coords_c[1:] - coords_c[:-1])


def face_values_r(mesh, f, bcs):
    """Scalar values on r-faces, (nr+1, nz); outer faces from bcs."""
    out = np.empty((mesh.nr + 1, mesh.nz))
    w = face_interp_weights(mesh.rc, mesh.rf)[:, None]
    out[1:-1] = (1 - w) * f[:-1] + w * f[1:]
    out[0] = boundary_value(bcs["axis"], f[0])
    out[-1] = boundary_value(bcs["leftSide"], f[-1])
    return out


def face_values_z(mesh, f, bcs):
    out = np.empty((mesh.nr, mesh.nz + 1))
    w = face_interp_weights(mesh.zc, mesh.zf)[None, :]
    out[:, 1:-1] = (1 - w) * f[:, :-1] + w * f[:, 1:]
    out[:, 0] = boundary_value(bcs["inlet"], f[:, 0])
    out[:, -1] = boundary_value(bcs["outlet"], f[:, -1])
    return out


def gradient(mesh, f, bcs):
    """Cell gradient (gr, gz); exact for affine fields in the interior.

    Central differences between cell centers inside, one-sided to the
    boundary-face value on the outer rings. Symmetry patches contribute a
    zero normal gradient.
    """
    f = np.asarray(f, dtype=float)
    if not np.all(np.isfinite(f)):
        raise FloatingPointError("gradient input contains non-finite values")
    gr = np.empty_like(f)
    gz = np.empty_like(f)
    rc, zc = mesh.rc, mesh.zc

    gr[1:-1] = (f[2:] - f[:-2]) / (rc[2:] - rc[:-2])[:, None]
    gz[:, 1:-1] = (f[:, 2:] - f[:, :-2]) / (zc[2:] - zc[:-2])[None, :]

    def low_side(bc, f0, f1, x_face, x0, x1):
        # gradient in the first cell ring, boundary face on the low side
        if bc[0] == "fixed":
            fb = boundary_value(bc, f0)
            return (f1 - fb) / (x1 - x_face)
        return (f1 - f0) / (x1 - x0)

    def high_side(bc, fm1, f0, x_face, xm1, x0):
        if bc[0] == "fixed":
            fb = boundary_value(bc, f0)
            return (fb - fm1) / (x_face - xm1)
        return (f0 - fm1) / (x0 - xm1)

    gr[0] = low_side(bcs["axis"], f[0], f[1], mesh.rf[0], rc[0], rc[1])
    gr[-1] = high_side(bcs["leftSide"], f[-2], f[-1],
                       mesh.rf[-1], rc[-2], rc[-1])
    gz[:, 0] = low_side(bcs["inlet"], f[:, 0], f[:, 1],
                        mesh.zf[0], zc[0], zc[1])
    gz[:, -1] = high_side(bcs["outlet"], f[:, -2], f[:, -1],
                          mesh.zf[-1], zc[-2], zc[-1])
    return gr, gz


def divergence(mesh, flux_r, flux_z):
    """Per-volume divergence of signed face fluxes (positive toward +r/+z)."""
    out = (flux_r[1:, :] - flux_r[:-1, :]
           + flux_z[:, 1:] - flux_z[:, :-1]) / mesh.vol
    return out


def _harmonic(gp, gn, dp, dn):
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (dp + dn) / (dp / gp + dn / gn)
    return np.where((gp <= 0) | (gn <= 0), 0.0, out)


def assemble_fv(mesh, *, dt_coeff=None, Fr=None, Fz=None, gamma=None,
                bcs=None, rhs=None, active=None, inactive_value=0.0,
                iface_r=None, iface_z=None, diag_extra=None):
    """Assemble the implicit FV system for one scalar.

    dt_coeff    : per-cell rho*V/dt added to the diagonal (None: steady)
    Fr, Fz      : advective face fluxes [kg/s or m^3/s], upwinded
    gamma       : per-cell diffusion coefficient (None: no diffusion);
                  negative entries are rejected
    bcs         : outer-patch boundary conditions for this scalar
    rhs         : per-cell volume-integrated explicit source
    active      : bool mask; rows of inactive cells are pinned to
                  inactive_value (scalar or array)
    iface_r/z   : per-face Dirichlet values applied on faces between an
                  active and an inactive cell (e.g. fiber coupling);
                  None means such faces are treated as zero-flux walls
    diag_extra  : additional per-cell diagonal contribution

    Returns (A, b, diag) with A in CSR form; diag is the assembled
    diagonal (used for Rhie-Chow style velocity interpolation).
    """
    nr, nz = mesh.nr, mesh.nz
    n = nr * nz
    if gamma is not None and np.any(np.asarray(gamma) < 0):
        raise ValueError("negative diffusion coefficient")
    if active is None:
        active = np.ones((nr, nz), dtype=bool)
    act = active

    diag = np.zeros((nr, nz))
    b = np.zeros((nr, nz)) if rhs is None else np.array(rhs, dtype=float)
    rows, cols, vals = [], [], []
    idx = np.arange(n).reshape(nr, nz)

    if dt_coeff is not None:
        diag += dt_coeff
    if diag_extra is not None:
        diag += diag_extra

    def add_offdiag(ip, jp, inb, jnb, coef):
        # coef multiplies f_N with negative sign in the row of P
        rows.append(idx[ip, jp].ravel())
        cols.append(idx[inb, jnb].ravel())
        vals.append(-coef.ravel())

    # ---- internal faces, r direction --------------------------------
    # face k between cells (k-1, j) and (k, j), k = 1..nr-1
    dP = (mesh.rf[1:-1] - mesh.rc[:-1])[:, None]   # center(lo) -> face
    dN = (mesh.rc[1:] - mesh.rf[1:-1])[:, None]    # face -> center(hi)
    A_f = mesh.area_r[1:-1, :]
    lo_act = act[:-1, :]
    hi_act = act[1:, :]
    both = lo_act & hi_act

    if gamma is not None:
        g = np.asarray(gamma, dtype=float)
        gf = _harmonic(g[:-1, :], g[1:, :], dP, dN)
        cond = gf * A_f / (dP + dN)
        c = np.where(both, cond, 0.0)
        diag[:-1, :] += c
        diag[1:, :] += c
        add_offdiag(*np.meshgrid(np.arange(nr - 1), np.arange(nz),
                                 indexing="ij"),
                    np.meshgrid(np.arange(1, nr), np.arange(nz),
                                indexing="ij")[0],
                    np.meshgrid(np.arange(1, nr), np.arange(nz),
                                indexing="ij")[1], c)
        add_offdiag(np.meshgrid(np.arange(1, nr), np.arange(nz),
                                indexing="ij")[0],
                    np.meshgrid(np.arange(1, nr), np.arange(nz),
                                indexing="ij")[1],
                    *np.meshgrid(np.arange(nr - 1), np.arange(nz),
                                 indexing="ij"), c)
        # active/inactive interface faces
        mixed_lo = lo_act & ~hi_act   # P is the low cell
        mixed_hi = hi_act & ~lo_act
        if iface_r is not None:
            vali = iface_r[1:-1, :]
            cl = np.where(mixed_lo, g[:-1, :] * A_f / dP, 0.0)
            diag[:-1, :] += cl
            b[:-1, :] += cl * vali
            ch = np.where(mixed_hi, g[1:, :] * A_f / dN, 0.0)
            diag[1:, :] += ch
            b[1:, :] += ch * vali

    if Fr is not None:
        F = Fr[1:-1, :]
        Fw = np.where(both, F, 0.0)   # no advection across walls/interfaces
        # low cell P: inflow when F < 0
        c_lo = np.maximum(-Fw, 0.0)
        diag[:-1, :] += c_lo
        add_offdiag(*np.meshgrid(np.arange(nr - 1), np.arange(nz),
                                 indexing="ij"),
                    np.meshgrid(np.arange(1, nr), np.arange(nz),
                                indexing="ij")[0],
                    np.meshgrid(np.arange(1, nr), np.arange(nz),
                                indexing="ij")[1], c_lo)
        # high cell P: inflow when F > 0
        c_hi = np.maximum(Fw, 0.0)
        diag[1:, :] += c_hi
        add_offdiag(np.meshgrid(np.arange(1, nr), np.arange(nz),
                                indexing="ij")[0],
                    np.meshgrid(np.arange(1, nr), np.arange(nz),
                                indexing="ij")[1],
                    *np.meshgrid(np.arange(nr - 1), np.arange(nz),
                                 indexing="ij"), c_hi)

    # ---- internal faces, z direction --------------------------------
    dPz = (mesh.zf[1:-1] - mesh.zc[:-1])[None, :]
    dNz = (mesh.zc[1:] - mesh.zf[1:-1])[None, :]
    A_fz = mesh.area_z[:, 1:-1]
    lo_act = act[:, :-1]
    hi_act = act[:, 1:]
    both = lo_act & hi_act

    if gamma is not None:
        gf = _harmonic(g[:, :-1], g[:, 1:], dPz, dNz)
        cond = gf * A_fz / (dPz + dNz)
        c = np.where(both, cond, 0.0)
        diag[:, :-1] += c
        diag[:, 1:] += c
        ii, jj = np.meshgrid(np.arange(nr), np.arange(nz - 1), indexing="ij")
        add_offdiag(ii, jj, ii, jj + 1, c)
        add_offdiag(ii, jj + 1, ii, jj, c)
        mixed_lo = lo_act & ~hi_act
        mixed_hi = hi_act & ~lo_act
        if iface_z is not None:
            vali = iface_z[:, 1:-1]
            cl = np.where(mixed_lo, g[:, :-1] * A_fz / dPz, 0.0)
            diag[:, :-1] += cl
            b[:, :-1] += cl * vali
            ch = np.where(mixed_hi, g[:, 1:] * A_fz / dNz, 0.0)
            diag[:, 1:] += ch
            b[:, 1:] += ch * vali

    if Fz is not None:
        F = Fz[:, 1:-1]
        Fw = np.where(both, F, 0.0)
        c_lo = np.maximum(-Fw, 0.0)
        diag[:, :-1] += c_lo
        ii, jj = np.meshgrid(np.arange(nr), np.arange(nz - 1), indexing="ij")
        add_offdiag(ii, jj, ii, jj + 1, c_lo)
        c_hi = np.maximum(Fw, 0.0)
        diag[:, 1:] += c_hi
        add_offdiag(ii, jj + 1, ii, jj, c_hi)

    # ---- outer boundary faces ---------------------------------------
    if bcs is not None:
        def outer(patch, F_face, A_face, g_cells, d_face, sl, sign):
            """sl: index of the boundary cell ring; sign: +1 if the outward
            normal points toward +coordinate."""
            bc = bcs[patch]
            if gamma is not None and bc[0] == "fixed":
                fb = boundary_value(bc, np.zeros_like(diag[sl]))
                c = g_cells * A_face / d_face
                diag[sl] += c
                b[sl] += c * fb
            if F_face is not None:
                Fout = sign * F_face   # positive = leaving the domain
                inflow = np.maximum(-Fout, 0.0)
                if bc[0] == "fixed":
                    fb = boundary_value(bc, np.zeros_like(diag[sl]))
                    diag[sl] += inflow
                    b[sl] += inflow * fb
                # zero_gradient/symmetry inflow carries the cell value:
                # continuity-subtracted form makes the term vanish.

        g_arr = np.asarray(gamma, dtype=float) if gamma is not None else None
        outer("axis", None if Fr is None else Fr[0, :], mesh.area_r[0, :],
              None if g_arr is None else g_arr[0, :],
              mesh.rc[0] - mesh.rf[0], (0, slice(None)), -1)
        outer("leftSide", None if Fr is None else Fr[-1, :],
              mesh.area_r[-1, :],
              None if g_arr is None else g_arr[-1, :],
              mesh.rf[-1] - mesh.rc[-1], (-1, slice(None)), +1)
        outer("inlet", None if Fz is None else Fz[:, 0], mesh.area_z[:, 0],
              None if g_arr is None else g_arr[:, 0],
              mesh.zc[0] - mesh.zf[0], (slice(None), 0), -1)
        outer("outlet", None if Fz is None else Fz[:, -1],
              mesh.area_z[:, -1],
              None if g_arr is None else g_arr[:, -1],
              mesh.zf[-1] - mesh.zc[-1], (slice(None), -1), +1)

    # ---- pin inactive cells ------------------------------------------
    pin = ~act
    if np.any(pin):
        diag[pin] = 1.0
        fixv = np.broadcast_to(np.asarray(inactive_value, dtype=float),
                               (nr, nz))
        b = np.where(pin, fixv, b)

    rows.append(idx.ravel())
    cols.append(idx.ravel())
    vals.append(diag.ravel())
    # drop off-diagonal entries in pinned rows
    rows_c = np.concatenate(rows)
    cols_c = np.concatenate(cols)
    vals_c = np.concatenate(vals)
    if np.any(pin):
        pin_flat = pin.ravel()
        keep = ~(pin_flat[rows_c] & (rows_c != cols_c))
        rows_c, cols_c, vals_c = rows_c[keep], cols_c[keep], vals_c[keep]
    A = sp.csr_matrix((vals_c, (rows_c, cols_c)), shape=(n, n))
    return A, b.ravel(), diag


def laplacian_system(mesh, gamma, bcs, active=None, iface_r=None,
                     iface_z=None, rhs=None):
    """Volume-integrated -div(gamma grad f) system: (A, b).

    Solving A f = b + sources gives the steady diffusion solution. A is
    symmetric on interior cells for uniform gamma.
    """
    A, b, _ = assemble_fv(mesh, gamma=gamma, bcs=bcs, active=active,
                          iface_r=iface_r, iface_z=iface_z, rhs=rhs)
    return A, b
