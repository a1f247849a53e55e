"""Post-processing: Bilger mixture fraction, scalar dissipation,
flame/droplet geometry, time series, and grid-convergence
extrapolation.

The mixture fraction uses the element-based coupling function

    beta = (2/M_C) w_C + (1/(2 M_H)) w_H - (1/M_O) w_O   [mol/g]

which is linear in composition and conserved under mixing and
reaction, so Z = (beta - beta_ox)/(beta_fuel - beta_ox) interpolates
between oxidizer (0) and fuel (1) streams.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .fields import default_bcs
from .operators import gradient
from .vof import EPS_MIXED, liquid_volume

# element masses on the integer g/mol convention of the coupling
# function (beta values are quoted in mol/g)
M_C_G, M_H_G, M_O_G = 12.0, 1.0, 16.0


def element_mass_fractions(omega, mech):
    """{element: mass fraction} over C, H, O, N for a composition with
    the species axis last."""
    return {el: mech.element_mass_fractions(omega, el)
            for el in ("C", "H", "O", "N")}


def bilger_beta(w_c, w_h, w_o):
    """Coupling function [mol/g] from element mass fractions."""
    return (2.0 / M_C_G) * np.asarray(w_c) \
        + (1.0 / (2.0 * M_H_G)) * np.asarray(w_h) \
        - (1.0 / M_O_G) * np.asarray(w_o)


def bilger_beta_from_composition(omega, mech):
    return bilger_beta(mech.element_mass_fractions(omega, "C"),
                       mech.element_mass_fractions(omega, "H"),
                       mech.element_mass_fractions(omega, "O"))


def mixture_fraction(beta, beta_fuel, beta_ox):
    if beta_fuel == beta_ox:
        raise ValueError("degenerate fuel/oxidizer streams")
    return (np.asarray(beta) - beta_ox) / (beta_fuel - beta_ox)


def stoichiometric_Z(beta_fuel, beta_ox):
    """Mixture fraction where the coupling function vanishes."""
    if beta_fuel == beta_ox:
        raise ValueError("degenerate fuel/oxidizer streams")
    return -beta_ox / (beta_fuel - beta_ox)


def scalar_dissipation(mesh, Z, D, bcs=None):
    """chi = 2 D |grad Z|^2 [1/s]."""
    gr, gz = gradient(mesh, Z, bcs or default_bcs())
    return 2.0 * np.asarray(D) * (gr ** 2 + gz ** 2)


def flame_and_droplet_geometry(mesh, Z, Z_st, alpha, D0=None):
    """Droplet equivalent diameter, flame diameter from the Z_st
    isoline, standoff ratio and (D/D0)^2.

    D_fl is twice the maximum radial coordinate of the Z = Z_st
    crossing (linearly interpolated between cell centers); absent when
    no crossing exists. Returns dict; raises ValueError when no liquid
    remains (the time series terminates there).
    """
    v_liq = liquid_volume(mesh, alpha)
    if v_liq <= 0.0:
        raise ValueError("no liquid remaining")
    d_dr = (6.0 * v_liq / np.pi) ** (1.0 / 3.0)
    out = {"D_dr": d_dr, "D_fl": None, "standoff": None,
           "DD0_sq": (d_dr / D0) ** 2 if D0 else None}
    Z = np.asarray(Z, dtype=float)
    above = Z >= Z_st
    if above.any() and not above.all():
        r_max = 0.0
        rc = mesh.rc
        for j in range(mesh.nz):
            col = Z[:, j]
            hot = col >= Z_st
            if not hot.any():
                continue
            i = int(np.max(np.nonzero(hot)))
            if i == mesh.nr - 1:
                r = rc[i]
            else:
                f = (Z_st - col[i]) / (col[i + 1] - col[i])
                r = rc[i] + f * (rc[i + 1] - rc[i])
            r_max = max(r_max, float(r))
        if r_max > 0.0:
            out["D_fl"] = 2.0 * r_max
            out["standoff"] = out["D_fl"] / d_dr
    return out


def t_z_scatter(mesh, Z, T, chi, alpha):
    """(Z, T, chi) tuples for pure-gas cells, one row per cell."""
    gas = (np.asarray(alpha) <= EPS_MIXED) & ~mesh.solid
    return np.column_stack([np.asarray(Z)[gas], np.asarray(T)[gas],
                            np.asarray(chi)[gas]])


def write_scatter(path, scatter):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["Z", "T", "chi"])
        w.writerows(scatter.tolist())


@dataclass
class TimeSeries:
    """Per-output-frame scalar metrics, written as CSV."""

    columns: tuple = ("t", "D_dr", "DD0_sq", "T_max", "D_fl",
                      "standoff", "omega_l_water")
    rows: list = field(default_factory=list)

    def append(self, **kwargs):
        self.rows.append([kwargs.get(c) for c in self.columns])

    def write(self, path):
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(self.columns)
            for row in self.rows:
                w.writerow(["" if v is None else v for v in row])


def richardson_extrapolate(values, cells, dim=2):
    """Generalized Richardson extrapolation from three grids.

    values: (f1, f2, f3) on cell counts N1 < N2 < N3; h_i = N_i^(-1/dim).
    Solves f_i = f_inf + C h_i^O for (f_inf, O) by bracketed root find
    on the two-ratio equation. Returns {"f_inf", "order", "status"},
    status in {"ok", "indeterminate", "oscillatory"}.
    """
    f1, f2, f3 = (float(v) for v in values)
    n1, n2, n3 = (float(n) for n in cells)
    if not n1 < n2 < n3:
        raise ValueError("cell counts must increase")
    h = np.array([n1, n2, n3]) ** (-1.0 / dim)
    d12, d23 = f1 - f2, f2 - f3
    if d12 == 0.0 and d23 == 0.0:
        return {"f_inf": f3, "order": None, "status": "indeterminate"}
    if d12 * d23 <= 0.0:
        return {"f_inf": f3, "order": None, "status": "oscillatory"}

    def g(p):
        return (h[0] ** p - h[1] ** p) / (h[1] ** p - h[2] ** p) \
            - d12 / d23

    lo, hi = 1e-3, 12.0
    # scan for a sign change (g is monotone in practice, but stay safe)
    ps = np.linspace(lo, hi, 200)
    vals = np.array([g(p) for p in ps])
    sign = np.sign(vals)
    idx = np.nonzero(sign[:-1] * sign[1:] < 0)[0]
    if idx.size == 0:
        return {"f_inf": f3, "order": None, "status": "oscillatory"}
    p = brentq(g, ps[idx[0]], ps[idx[0] + 1], xtol=1e-12)
    c = d23 / (h[1] ** p - h[2] ** p)
    f_inf = f3 - c * h[2] ** p
    return {"f_inf": f_inf, "order": p, "status": "ok"}
