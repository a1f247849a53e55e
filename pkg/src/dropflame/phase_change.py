"""Evaporation, condensation and boiling source terms.

Sign convention: the volumetric phase-change rate ``mdot`` [kg/(m^3 s)]
is negative for evaporation and positive for condensation. In
sub-boiling interface cells it comes from the gas-side species balance
at the interface,

    mdot = (sum_i j_i . grad(alpha)) / (1 - sum_i omega_i),
    mdot_i = j_i . grad(alpha) + mdot * omega_i,

with j_i the gas-phase diffusive mass flux of liquid-borne species i and
omega_i its gas mass fraction at the cell. When the liquid reaches its
bubble point, the excess sensible heating is converted to vapor instead:

    mdot = -(rho cp dT/dt) / dh_ev_mix,

evaluated from the pre-clamp temperature tendency, and the resulting
rate is redistributed onto the interface cells (weighted by
|grad alpha| V) so the marker regresses where the surface actually is.
"""

from __future__ import annotations

import logging

import numpy as np

from .fields import default_bcs
from .operators import gradient
from .vof import EPS_MIXED

logger = logging.getLogger(__name__)

REGIME_INERT = 0
REGIME_SUB_BOILING = 1
REGIME_BOILING = 2

DENOM_FLOOR = 1e-6


def smoothed_alpha_gradient(mesh, alpha, bcs=None, width=1):
    """Gradient of the liquid marker smoothed ``width`` times with a
    separable 1-2-1 kernel (reduces stair-casing of the raw marker)."""
    bcs = bcs or default_bcs()
    a = np.asarray(alpha, dtype=float)
    for _ in range(width):
        pad_r = np.concatenate([a[:1], a, a[-1:]], axis=0)
        a = 0.25 * (pad_r[:-2] + 2.0 * pad_r[1:-1] + pad_r[2:])
        pad_z = np.concatenate([a[:, :1], a, a[:, -1:]], axis=1)
        a = 0.25 * (pad_z[:, :-2] + 2.0 * pad_z[:, 1:-1] + pad_z[:, 2:])
    return gradient(mesh, a, bcs)


def evaporation_rate_mono(j_dot_grad_alpha, omega_g):
    """Total rate from the gas-side fuel balance, single liquid species.

    ``j_dot_grad_alpha`` is j^G . grad(alpha) [kg/(m^3 s)]; ``omega_g``
    the fuel vapor mass fraction. Cells with 1 - omega_g below the
    degeneracy floor must be escalated to the boiling branch by the
    caller; here they raise.
    """
    denom = 1.0 - np.asarray(omega_g, dtype=float)
    if np.any(denom < DENOM_FLOOR):
        raise ValueError("omega -> 1: interface balance degenerate, "
                         "boiling branch required")
    return np.asarray(j_dot_grad_alpha, dtype=float) / denom


def evaporation_rate_multi(j_dot_grad_alpha_i, omega_g_i):
    """Total rate from the summed gas-side balance of all liquid-borne
    species; axes (n_species, ...)."""
    j = np.asarray(j_dot_grad_alpha_i, dtype=float)
    w = np.asarray(omega_g_i, dtype=float)
    denom = 1.0 - w.sum(axis=0)
    if np.any(denom < DENOM_FLOOR):
        raise ValueError("sum omega -> 1: interface balance degenerate, "
                         "boiling branch required")
    return j.sum(axis=0) / denom


def species_flux(j_dot_grad_alpha_i, mdot, omega_g_i):
    """Per-species rates; sums to ``mdot`` identically."""
    return (np.asarray(j_dot_grad_alpha_i, dtype=float)
            + mdot * np.asarray(omega_g_i, dtype=float))


def boiling_rate(dTdt, rho, cp, dh_ev_mix):
    """Rate converting the sensible-heating tendency of a boiling cell
    to vapor; negative (evaporating) while the cell is heated."""
    dh = np.asarray(dh_ev_mix, dtype=float)
    if np.any(dh <= 0):
        raise ValueError("non-positive heat of vaporization")
    return -(np.asarray(rho) * np.asarray(cp) * np.asarray(dTdt)) / dh


def boiling_species_split(mdot, p, p_sat_i, x_liq_i, mw_i, mw_mix,
                          gamma_i=None):
    """Split a boiling-cell total rate over liquid species using the
    equilibrium vapor mass fractions; the split is renormalized to sum
    to 1 (flagged when the raw sum deviates)."""
    p_sat_i = np.asarray(p_sat_i, dtype=float)
    x_liq_i = np.asarray(x_liq_i, dtype=float)
    g = np.ones_like(p_sat_i) if gamma_i is None else np.asarray(gamma_i)
    frac = (p_sat_i / p) * x_liq_i * (np.asarray(mw_i) / mw_mix) * g
    total = frac.sum(axis=0)
    if np.any(np.abs(total - 1.0) > 1e-3):
        logger.debug("boiling split renormalized: sum of equilibrium "
                     "fractions deviates from 1 by up to %.3g",
                     float(np.max(np.abs(total - 1.0))))
    return mdot * frac / total


def redistribute_to_interface(mesh, mdot_bulk, alpha, bcs=None):
    """Move bulk (boiling-cell) rates onto interface cells.

    The total mass rate carried by ``mdot_bulk`` is deposited on mixed
    cells with weights |grad alpha| V. Returns (mdot_interface,
    unassigned_rate); the latter is nonzero (and flagged) only when no
    interface cell exists.
    """
    gr, gz = smoothed_alpha_gradient(mesh, alpha, bcs)
    w = np.sqrt(gr ** 2 + gz ** 2) * mesh.vol
    mixed = (np.asarray(alpha) > EPS_MIXED) & \
        (np.asarray(alpha) < 1.0 - EPS_MIXED)
    w = np.where(mixed, w, 0.0)
    total_rate = float(np.sum(mdot_bulk * mesh.vol))
    w_sum = w.sum()
    out = np.zeros(mesh.vol.shape)
    if w_sum <= 0.0:
        if total_rate != 0.0:
            logger.warning("boiling rate %.3g kg/s with no interface "
                           "cells: accumulated unassigned", total_rate)
        return out, total_rate
    out = total_rate * w / w_sum / mesh.vol
    return out, 0.0


def interface_fluxes(mesh, alpha, T, j_dot_grad_alpha_i, omega_g_i,
                     T_boil, dTdt_preclamp, rho_liq, cp_liq, dh_ev_mix,
                     split_kwargs=None, bcs=None):
    """Regime dispatch: per-cell total and per-species rates.

    Returns dict with ``mdot`` (nr, nz), ``mdot_i`` (n_species, nr, nz)
    and ``regime`` flags. Sub-boiling applies in mixed cells below the
    bubble point with a well-posed gas-side balance; boiling applies in
    liquid-bearing cells at/above the bubble point (or with a degenerate
    balance) and is redistributed onto the interface.
    """
    alpha = np.asarray(alpha, dtype=float)
    T = np.asarray(T, dtype=float)
    j = np.asarray(j_dot_grad_alpha_i, dtype=float)
    w = np.asarray(omega_g_i, dtype=float)
    n_sp = j.shape[0]
    mixed = (alpha > EPS_MIXED) & (alpha < 1.0 - EPS_MIXED) & ~mesh.solid
    liquid = (alpha > EPS_MIXED) & ~mesh.solid

    denom = 1.0 - w.sum(axis=0)
    degenerate = denom < DENOM_FLOOR
    boiling = liquid & ((T >= T_boil) | (mixed & degenerate))
    sub = mixed & ~boiling & ~degenerate

    regime = np.full(alpha.shape, REGIME_INERT, dtype=int)
    regime[sub] = REGIME_SUB_BOILING
    regime[boiling] = REGIME_BOILING

    mdot = np.zeros(alpha.shape)
    mdot_i = np.zeros((n_sp,) + alpha.shape)
    if np.any(sub):
        safe = np.where(sub, denom, 1.0)
        m_sub = np.where(sub, j.sum(axis=0) / safe, 0.0)
        mdot += m_sub
        mdot_i += np.where(sub, j + m_sub * w, 0.0)

    if np.any(boiling):
        m_bulk = np.where(boiling,
                          boiling_rate(dTdt_preclamp, rho_liq, cp_liq,
                                       dh_ev_mix), 0.0)
        m_if, unassigned = redistribute_to_interface(mesh, m_bulk,
                                                     alpha, bcs)
        mdot += m_if
        if n_sp == 1:
            mdot_i += m_if[None]
        else:
            if split_kwargs:
                mdot_i += boiling_species_split(m_if, **split_kwargs)
            else:
                mdot_i += m_if[None] / n_sp
    else:
        unassigned = 0.0

    return {"mdot": mdot, "mdot_i": mdot_i, "regime": regime,
            "unassigned": unassigned}
