"""Scalar transport: species diffusion driven by mole-fraction
gradients, gas/liquid species advance, and the energy equation.

Diffusive fluxes follow j_i = -rho D_i (M_i / M_w) grad(x_i) on faces;
because these do not sum to zero for unequal molar masses, the residual
is subtracted from the locally most abundant species so the net
diffusive mass flux of every face vanishes.

The species and energy advances use implicit Euler: upwind advection
and Fickian diffusion are implicit, while the difference between the
full mole-gradient flux and the Fickian flux enters as an explicit
deferred correction (unconditionally stable, exact at steady state).
"""

from __future__ import annotations

import logging

import numpy as np
from scipy.sparse.linalg import splu, spsolve

from .fields import boundary_value
from .operators import (_harmonic, assemble_fv, divergence,
                        face_values_r, face_values_z, gradient)

logger = logging.getLogger(__name__)

T_MIN, T_MAX = 200.0, 4000.0
NORMALIZATION_ABORT = 1e-6
MAX_CORRECTION_ITERS = 300
CORRECTION_TOL = 1e-7
CORRECTION_RELAX = 0.7
_DRIFT_TRACE = None
_LAST_RAW = None


class StepRejected(RuntimeError):
    """The implicit step produced an unphysical state; retry smaller."""


def diffusion_flux(mesh, omega, T, p, mech, D, bcs):
    """Corrected per-species diffusive mass fluxes on faces.

    omega: (n_sp, nr, nz) mass fractions; D: (n_sp, nr, nz)
    diffusivities; returns (jr, jz) with shapes (n_sp, nr+1, nz) and
    (n_sp, nr, nz+1) [kg/(m^2 s)], zero on the outer boundary faces,
    summing to zero over species on every face.
    """
    omega = np.asarray(omega, dtype=float)
    n_sp = omega.shape[0]
    x = mech.mole_fractions(np.moveaxis(omega, 0, -1))
    x = np.moveaxis(x, -1, 0)
    mw_mix = mech.mean_mw(np.moveaxis(omega, 0, -1))
    rho = mech.density(T, p, np.moveaxis(omega, 0, -1))

    rho_f_r = face_values_r(mesh, rho, bcs)
    rho_f_z = face_values_z(mesh, rho, bcs)
    mw_f_r = face_values_r(mesh, mw_mix, bcs)
    mw_f_z = face_values_z(mesh, mw_mix, bcs)

    jr = np.zeros((n_sp, mesh.nr + 1, mesh.nz))
    jz = np.zeros((n_sp, mesh.nr, mesh.nz + 1))
    inv_dr = 1.0 / (mesh.rc[1:] - mesh.rc[:-1])[:, None]
    inv_dz = 1.0 / (mesh.zc[1:] - mesh.zc[:-1])[None, :]
    for i in range(n_sp):
        if not np.all(np.isfinite(x[i])):
            raise FloatingPointError("non-finite mole fraction")
        D_f_r = face_values_r(mesh, D[i], bcs)
        D_f_z = face_values_z(mesh, D[i], bcs)
        gx_r = (x[i, 1:, :] - x[i, :-1, :]) * inv_dr
        gx_z = (x[i, :, 1:] - x[i, :, :-1]) * inv_dz
        mw_i = mech.species[i].mw
        jr[i, 1:-1, :] = -rho_f_r[1:-1] * D_f_r[1:-1] * \
            (mw_i / mw_f_r[1:-1]) * gx_r
        jz[i, :, 1:-1] = -rho_f_z[:, 1:-1] * D_f_z[:, 1:-1] * \
            (mw_i / mw_f_z[:, 1:-1]) * gx_z

    # no diffusive flux across fluid/solid faces
    fr, fz = mesh.fiber_faces()
    jr[:, fr] = 0.0
    jz[:, fz] = 0.0

    # sum correction distributed over species by face mass fraction
    # (correction-velocity form; smooth in the composition, unlike
    # charging the whole residual to a single species, which flips
    # discontinuously where two mass fractions tie)
    omega_f_r = np.stack([face_values_r(mesh, omega[i], bcs)
                          for i in range(n_sp)])
    omega_f_z = np.stack([face_values_z(mesh, omega[i], bcs)
                          for i in range(n_sp)])
    sum_r = np.where(omega_f_r.sum(axis=0) > 0, omega_f_r.sum(axis=0), 1.0)
    sum_z = np.where(omega_f_z.sum(axis=0) > 0, omega_f_z.sum(axis=0), 1.0)
    jr -= omega_f_r / sum_r[None] * jr.sum(axis=0)[None]
    jz -= omega_f_z / sum_z[None] * jz.sum(axis=0)[None]
    return jr, jz


def _flux_divergence(mesh, jr, jz):
    """Per-volume divergence of a face flux density [X/(m^2 s)] ->
    [X/(m^3 s)]."""
    return divergence(mesh, jr * mesh.area_r, jz * mesh.area_z)


def solve_gas_species(mesh, omega, rho, Fr, Fz, T, p, mech, D, dt,
                      bcs_list, sources=None, active=None):
    """Implicit advance of all gas mass fractions.

    omega: (n_sp, nr, nz); Fr/Fz: advective mass fluxes on faces
    [kg/s]; D: (n_sp, nr, nz) diffusivities; sources: optional
    (n_sp, nr, nz) [kg/(m^3 s)] (reactions, evaporation); bcs_list: one
    bc dict per species. Returns normalized omega; raises StepRejected
    when the post-solve sum-to-one drift exceeds the abort threshold.
    """
    omega = np.asarray(omega, dtype=float)
    n_sp = omega.shape[0]
    # the deferred mole-gradient correction must vanish on faces the
    # implicit operator blocks
    if active is not None:
        dead_r = np.zeros((mesh.nr + 1, mesh.nz), dtype=bool)
        dead_z = np.zeros((mesh.nr, mesh.nz + 1), dtype=bool)
        dead_r[1:-1] = ~(active[:-1] & active[1:])
        dead_z[:, 1:-1] = ~(active[:, :-1] & active[:, 1:])
    else:
        dead_r = dead_z = None
    dP_r = (mesh.rf[1:-1] - mesh.rc[:-1])[:, None]
    dN_r = (mesh.rc[1:] - mesh.rf[1:-1])[:, None]
    dP_z = (mesh.zf[1:-1] - mesh.zc[:-1])[None, :]
    dN_z = (mesh.zc[1:] - mesh.zf[1:-1])[None, :]
    fr_fib, fz_fib = mesh.fiber_faces()

    # fixed-composition boundary faces: the implicit operator applies a
    # per-species Fickian flux over the half cell, whose sum over
    # species is not zero; extend the deferred correction to those
    # faces so the net boundary flux is the sum-corrected one
    bc_patches = []
    for patch, sl, d_face, area in (
            ("axis", (0, slice(None)), mesh.rc[0] - mesh.rf[0],
             mesh.area_r[0, :]),
            ("leftSide", (-1, slice(None)), mesh.rf[-1] - mesh.rc[-1],
             mesh.area_r[-1, :]),
            ("inlet", (slice(None), 0), mesh.zc[0] - mesh.zf[0],
             mesh.area_z[:, 0]),
            ("outlet", (slice(None), -1), mesh.zf[-1] - mesh.zc[-1],
             mesh.area_z[:, -1])):
        if bcs_list[0][patch][0] != "fixed":
            continue
        wb = np.stack([np.broadcast_to(
            boundary_value(bcs_list[i][patch], np.zeros(area.shape[0])),
            area.shape) for i in range(n_sp)])
        xb = np.moveaxis(mech.mole_fractions(np.moveaxis(wb, 0, -1)),
                         -1, 0)
        mwb = mech.mean_mw(np.moveaxis(wb, 0, -1))
        bc_patches.append((sl, d_face, area, wb, xb, mwb))

    # The correction (difference between the full multicomponent flux
    # and the implicit Fickian part) is lagged, so a single pass breaks
    # sum-to-one during transients: each species advances with its own
    # diffusivity while the lagged correction was evaluated on the old
    # field.  Iterating the correction to a fixed point makes the net
    # species flux equal the full corrected flux at the *new* field,
    # whose per-face sum is zero by construction, so sum(omega) is then
    # transported like a passive unity field.  The system matrices do
    # not change across iterations, so each pass is only n_sp
    # back-substitutions plus flux evaluations.
    lu = [None] * n_sp
    cur = omega
    out = np.empty_like(omega)
    out_prev = None
    d_prev = None
    best = None
    best_drift = np.inf
    relax = 1.0
    accelerate = True
    for it in range(MAX_CORRECTION_ITERS):
        # evaluate the correction on the physical (clipped) field:
        # negative intermediates would blow up the mole-fraction
        # conversion and with it the whole iteration
        cur_eval = np.clip(cur, 0.0, None)
        jr_full, jz_full = diffusion_flux(mesh, cur_eval, T, p, mech, D,
                                          bcs_list[0])
        if dead_r is not None:
            jr_full = np.where(dead_r[None], 0.0, jr_full)
            jz_full = np.where(dead_z[None], 0.0, jz_full)
        bc_corr = np.zeros((n_sp,) + mesh.vol.shape)
        if bc_patches:
            x_cur = np.moveaxis(
                mech.mole_fractions(np.moveaxis(cur_eval, 0, -1)), -1, 0)
            for sl, d_face, area, wb, xb, mwb in bc_patches:
                jb = np.empty_like(wb)
                jfb = np.empty_like(wb)
                for i in range(n_sp):
                    g_cell = (rho * D[i])[sl]
                    jb[i] = -rho[sl] * D[i][sl] * \
                        (mech.species[i].mw / mwb) * \
                        (xb[i] - x_cur[i][sl]) / d_face
                    jfb[i] = -g_cell * (wb[i] - cur_eval[i][sl]) / d_face
                jb -= wb * jb.sum(axis=0)[None]
                bc_corr[(slice(None),) + sl] += \
                    (jb - jfb) * area / mesh.vol[sl]
        for i in range(n_sp):
            gamma = rho * D[i]
            # Fickian part of the full flux with the same (harmonic)
            # face coefficients the implicit operator uses, so the
            # deferred correction cancels exactly at the fixed point
            gw_r = np.zeros((mesh.nr + 1, mesh.nz))
            gw_z = np.zeros((mesh.nr, mesh.nz + 1))
            gw_r[1:-1] = (cur_eval[i, 1:, :] - cur_eval[i, :-1, :]) / \
                (mesh.rc[1:] - mesh.rc[:-1])[:, None]
            gw_z[:, 1:-1] = (cur_eval[i, :, 1:] - cur_eval[i, :, :-1]) / \
                (mesh.zc[1:] - mesh.zc[:-1])[None, :]
            gam_f_r = np.zeros((mesh.nr + 1, mesh.nz))
            gam_f_z = np.zeros((mesh.nr, mesh.nz + 1))
            gam_f_r[1:-1] = _harmonic(gamma[:-1, :], gamma[1:, :],
                                      dP_r, dN_r)
            gam_f_z[:, 1:-1] = _harmonic(gamma[:, :-1], gamma[:, 1:],
                                         dP_z, dN_z)
            jr_fick = -gam_f_r * gw_r
            jz_fick = -gam_f_z * gw_z
            jr_fick[[0, -1], :] = 0.0
            jz_fick[:, [0, -1]] = 0.0
            jr_fick[fr_fib] = 0.0
            jz_fick[fz_fib] = 0.0
            if dead_r is not None:
                jr_fick = np.where(dead_r, 0.0, jr_fick)
                jz_fick = np.where(dead_z, 0.0, jz_fick)
            corr = _flux_divergence(mesh, jr_full[i] - jr_fick,
                                    jz_full[i] - jz_fick) + bc_corr[i]
            rhs = rho * mesh.vol * omega[i] / dt - corr * mesh.vol
            if sources is not None:
                rhs = rhs + np.asarray(sources[i]) * mesh.vol
            A, b, _ = assemble_fv(mesh, dt_coeff=rho * mesh.vol / dt,
                                  Fr=Fr, Fz=Fz, gamma=gamma,
                                  bcs=bcs_list[i], rhs=rhs,
                                  active=active, inactive_value=omega[i])
            if lu[i] is None:
                lu[i] = splu(A.tocsc())
            out[i] = lu[i].solve(b).reshape(omega[i].shape)
        s_it = out.sum(axis=0)
        live_it = np.ones(s_it.shape, dtype=bool) if active is None \
            else active
        drift_it = float(np.max(np.abs(s_it[live_it] - 1.0), initial=0.0))
        if _DRIFT_TRACE is not None:
            _DRIFT_TRACE.append(drift_it)
        if drift_it < CORRECTION_TOL:
            break
        # safeguard: if the iteration stops contracting, restart from
        # the best iterate with damping and no extrapolation
        if not np.isfinite(drift_it) or drift_it > 10.0 * best_drift:
            cur = omega.copy() if best is None else best.copy()
            out_prev = None
            d_prev = None
            accelerate = False
            relax = 0.5
            continue
        if drift_it < best_drift:
            best_drift = drift_it
            best = out.copy()
        # accelerate the linearly converging dominant mode: estimate
        # the contraction factor from successive increments and
        # extrapolate to the fixed point (Aitken)
        new_cur = relax * out + (1.0 - relax) * cur
        if out_prev is not None:
            d = out - out_prev
            if accelerate and d_prev is not None and it % 3 == 2:
                denom = float(np.sum(d_prev * d_prev))
                lam = float(np.sum(d * d_prev)) / denom if denom > 0 \
                    else 0.0
                if 0.0 < lam < 0.95:
                    new_cur = out + lam / (1.0 - lam) * d
            d_prev = d
        out_prev = out.copy()
        cur = new_cur

    if best is not None and best_drift < drift_it:
        out = best
    global _LAST_RAW
    _LAST_RAW = out.copy()
    out = np.clip(out, 0.0, None)
    s = out.sum(axis=0)
    live = np.ones(s.shape, dtype=bool) if active is None else active
    drift = float(np.max(np.abs(s[live] - 1.0), initial=0.0))
    if drift > NORMALIZATION_ABORT:
        raise StepRejected(
            f"species normalization drift {drift:.3e} > "
            f"{NORMALIZATION_ABORT:g}: inconsistent fluxes")
    out = np.where(live[None], out / np.where(s > 0, s, 1.0)[None], out)
    return out


def solve_liquid_species(mesh, omega_l, alpha, rho_l, mdot_i, dt,
                         Fr_liq=None, Fz_liq=None, D_l=None):
    """Advance liquid species mass fractions by phase change, optional
    liquid-side diffusion and optional advection (explicit bookkeeping
    on per-cell species masses; the marker itself moves in the VOF
    step).

    mdot_i: (n_sp, nr, nz) per-species phase-change rates (negative
    removes liquid). Returns (omega_l, budget) where budget is the net
    liquid mass change [kg] of each species this step.
    """
    omega_l = np.asarray(omega_l, dtype=float)
    n_sp = omega_l.shape[0]
    m_cell = np.asarray(alpha) * np.asarray(rho_l) * mesh.vol
    m_i = omega_l * m_cell[None]
    dm = np.asarray(mdot_i, dtype=float) * mesh.vol * dt
    if not (np.any(dm) or D_l is not None or Fr_liq is not None):
        return omega_l.copy(), np.zeros(n_sp)

    if D_l is not None and n_sp > 1:
        liq = np.asarray(alpha) > 1e-9
        gam = np.where(liq, np.asarray(rho_l) * D_l, 0.0)
        for i in range(n_sp):
            gw_r = np.zeros((mesh.nr + 1, mesh.nz))
            gw_z = np.zeros((mesh.nr, mesh.nz + 1))
            gw_r[1:-1] = (omega_l[i, 1:] - omega_l[i, :-1]) / \
                (mesh.rc[1:] - mesh.rc[:-1])[:, None]
            gw_z[:, 1:-1] = (omega_l[i, :, 1:] - omega_l[i, :, :-1]) / \
                (mesh.zc[1:] - mesh.zc[:-1])[None, :]
            g_r = np.minimum(np.pad(gam, ((0, 1), (0, 0)))[:, :],
                             np.pad(gam, ((1, 0), (0, 0)))[:, :])
            g_z = np.minimum(np.pad(gam, ((0, 0), (0, 1))),
                             np.pad(gam, ((0, 0), (1, 0))))
            jr = -g_r * gw_r
            jz = -g_z * gw_z
            dm[i] -= _flux_divergence(mesh, jr, jz) * mesh.vol * dt

    if Fr_liq is not None:
        for i in range(n_sp):
            w_up_r = np.zeros_like(Fr_liq)
            w_up_r[1:-1] = np.where(Fr_liq[1:-1] > 0, omega_l[i, :-1],
                                    omega_l[i, 1:])
            w_up_z = np.zeros_like(Fz_liq)
            w_up_z[:, 1:-1] = np.where(Fz_liq[:, 1:-1] > 0,
                                       omega_l[i, :, :-1],
                                       omega_l[i, :, 1:])
            dm[i] -= divergence(mesh, Fr_liq * w_up_r,
                                Fz_liq * w_up_z) * mesh.vol * dt

    m_new = m_i + dm
    if np.any(m_new.sum(axis=0) < -1e-14 * max(m_cell.max(), 1e-300)):
        raise StepRejected("liquid species mass driven negative")
    m_new = np.clip(m_new, 0.0, None)
    tot = m_new.sum(axis=0)
    omega_new = np.where(tot[None] > 0, m_new / np.where(tot > 0, tot,
                                                         1.0)[None],
                         omega_l)
    if np.any((omega_new < -1e-12) | (omega_new > 1 + 1e-12)):
        raise StepRejected("liquid mass fraction out of bounds")
    budget = (m_new - m_i).sum(axis=(1, 2))
    return omega_new, budget


def enthalpy_flux_source(mesh, T, jr, jz, cp_i, bcs):
    """Cell-centered enthalpy-transport correction -grad(T) . sum_i
    (j_i cp_i) [W/m^3] from the species diffusion fluxes."""
    gr, gz = gradient(mesh, T, bcs)
    jcp_r = np.tensordot(cp_i, jr, axes=(0, 0)) if np.ndim(cp_i) == 1 \
        else (cp_i * jr).sum(axis=0)
    jcp_z = np.tensordot(cp_i, jz, axes=(0, 0)) if np.ndim(cp_i) == 1 \
        else (cp_i * jz).sum(axis=0)
    # face -> cell average of the flux vector
    jc_r = 0.5 * (jcp_r[:-1, :] + jcp_r[1:, :])
    jc_z = 0.5 * (jcp_z[:, :-1] + jcp_z[:, 1:])
    return -(gr * jc_r + gz * jc_z)


def solve_energy(mesh, T, rho_cp, k, Fr_cp, Fz_cp, q_source, dt, bcs,
                 active=None, iface_r=None, iface_z=None):
    """Implicit-Euler advance of temperature.

    Fr_cp/Fz_cp: advective face fluxes of heat capacity [W/K] (mass
    flux times face cp); q_source: net volumetric source [W/m^3]
    combining evaporation cooling (negative while evaporating),
    reaction heat (positive for exothermic), radiation sink (entering
    negative) and the enthalpy-flux correction. Raises StepRejected
    outside the physical bounds.
    """
    T = np.asarray(T, dtype=float)
    if iface_r is not None:
        iface_r = np.nan_to_num(iface_r, nan=0.0)
    if iface_z is not None:
        iface_z = np.nan_to_num(iface_z, nan=0.0)
    rhs = rho_cp * mesh.vol * T / dt
    if q_source is not None:
        rhs = rhs + np.asarray(q_source) * mesh.vol
    A, b, _ = assemble_fv(mesh, dt_coeff=rho_cp * mesh.vol / dt,
                          Fr=Fr_cp, Fz=Fz_cp, gamma=k, bcs=bcs,
                          rhs=rhs, active=active, inactive_value=T,
                          iface_r=iface_r, iface_z=iface_z)
    out = spsolve(A.tocsc(), b).reshape(T.shape)
    live = np.ones(T.shape, dtype=bool) if active is None else active
    if np.any(out[live] < T_MIN) or np.any(out[live] > T_MAX):
        raise StepRejected(
            f"temperature out of [{T_MIN:g}, {T_MAX:g}] K "
            f"(range {out[live].min():.1f}..{out[live].max():.1f})")
    return out
