"""Vapor-liquid equilibrium at the droplet interface.

Modified Raoult's law: the interface mole fraction of each volatile
species is x_i^G = p_sat,i(T) x_i^L gamma_i / p, with an activity model
supplying gamma_i. Non-volatile (ambient) gas species fill the remainder
in their far-field proportions. The bubble point is the temperature at
which sum_i x_i^L gamma_i p_sat,i(T) = p.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .liquid import LiquidSet


class ActivityModel:
    """Base class: activity coefficients gamma_i(x_L, T)."""

    def gamma(self, x_l, T):
        raise NotImplementedError


class IdealSolution(ActivityModel):
    def gamma(self, x_l, T):
        return np.ones_like(np.asarray(x_l, dtype=float))


@dataclass
class MargulesBinary(ActivityModel):
    """Two-parameter Margules model for a binary liquid.

    ln gamma_1 = x2^2 (A12 + 2 (A21 - A12) x1), symmetric for gamma_2.
    A12/A21 are dimensionless (already divided by RT); temperature
    dependence is neglected over the narrow droplet range.
    """

    A12: float
    A21: float

    def gamma(self, x_l, T):
        x = np.asarray(x_l, dtype=float)
        if x.shape[-1] != 2:
            raise ValueError("Margules model is binary only")
        x1, x2 = x[..., 0], x[..., 1]
        g1 = np.exp(x2**2 * (self.A12 + 2.0 * (self.A21 - self.A12) * x1))
        g2 = np.exp(x1**2 * (self.A21 + 2.0 * (self.A12 - self.A21) * x2))
        return np.stack([g1, g2], axis=-1)


def mole_from_mass_liquid(omega_l, liquids: LiquidSet, mech):
    """Liquid mass fractions -> liquid mole fractions."""
    omega_l = np.asarray(omega_l, dtype=float)
    mw = np.array([mech[liq.gas_species].mw for liq in liquids.liquids])
    x = omega_l / mw
    return x / x.sum(axis=-1, keepdims=True)


def equilibrium_gas_composition(T, p, omega_l, liquids: LiquidSet, mech,
                                activity: ActivityModel | None = None,
                                ambient_omega=None):
    """Interface gas composition from modified Raoult's law.

    Parameters are scalar-state: one interface condition at a time
    (T [K], p [Pa], omega_l liquid mass fractions over ``liquids``).
    ``ambient_omega`` gives far-field gas mass fractions over
    ``mech.names`` used to apportion the non-volatile remainder.

    Returns dict with mole fractions ``x`` and mass fractions ``omega``
    over the full gas species set, plus ``saturated`` (True when the
    raw volatile mole fractions sum to >= 1, i.e. T is at/above the
    bubble point and Raoult's law has no subsaturated solution).
    """
    activity = activity or IdealSolution()
    omega_l = np.asarray(omega_l, dtype=float)
    x_l = mole_from_mass_liquid(omega_l, liquids, mech)
    gamma = activity.gamma(x_l, T)
    x_vol = np.array([liq.p_sat(T) for liq in liquids.liquids]) * x_l \
        * gamma / p
    vol_idx = [mech.index[liq.gas_species] for liq in liquids.liquids]
    saturated = x_vol.sum() >= 1.0
    x = np.zeros(mech.n_species)
    if saturated:
        x[vol_idx] = x_vol / x_vol.sum()
    else:
        x[vol_idx] = x_vol
        if ambient_omega is None:
            raise ValueError("ambient_omega required below saturation")
        x_amb = mech.mole_fractions(np.asarray(ambient_omega, dtype=float))
        x_amb = np.array(x_amb, dtype=float)
        x_amb[vol_idx] = 0.0
        s = x_amb.sum()
        if s <= 0:
            raise ValueError("ambient composition is all volatiles")
        x += x_amb * (1.0 - x_vol.sum()) / s
    omega = mech.mass_fractions_from_mole(x)
    return {"x": x, "omega": omega, "saturated": bool(saturated)}


def bubble_point_temperature(p, omega_l, liquids: LiquidSet, mech,
                             activity: ActivityModel | None = None,
                             tol=1e-4):
    """Bubble-point temperature [K] of the liquid mixture at pressure p,
    solved by bracketed root finding to |dT| < tol."""
    activity = activity or IdealSolution()
    omega_l = np.asarray(omega_l, dtype=float)
    x_l = mole_from_mass_liquid(omega_l, liquids, mech)

    lo = max(liq.trange[0] for liq in liquids.liquids)
    hi = min(liq.trange[1] for liq in liquids.liquids)

    def resid(T):
        gamma = activity.gamma(x_l, T)
        psat = np.array([liq.p_sat(T) for liq in liquids.liquids])
        return float((x_l * gamma * psat).sum() - p)

    f_lo, f_hi = resid(lo), resid(hi)
    if f_lo > 0:
        return lo      # already boiling at the coldest valid temperature
    if f_hi < 0:
        raise ValueError(
            f"no bubble point below {hi} K at p = {p:.4g} Pa")
    return brentq(resid, lo, hi, xtol=tol)
