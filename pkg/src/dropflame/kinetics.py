"""Finite-rate chemistry: mass-action Arrhenius rates, stiff per-cell
constant-pressure reactor integration, and the hot-spot ignition patch.

Reaction integration is operator-split from transport (Lie splitting:
transport first, then reaction over the full step) and runs only in
pure-gas cells. Each cell is an adiabatic constant-pressure reactor, so
mixture enthalpy and element mass are conserved by the substep.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import solve_ivp

from .thermo import GasMechanism

#: floor applied inside rate evaluation only, to keep fractional-order
#: concentration powers finite
_CONC_FLOOR = 0.0


def reaction_rates(mech: GasMechanism, T, p, omega):
    """Mass-action reaction rates.

    Returns dict with ``rate`` (mol/(m^3 s), per reaction, last axis),
    ``src`` (species mass source, kg/(m^3 s)), and ``heat`` (W/m^3,
    positive for exothermic reactions). Inputs broadcast; omega has the
    species axis last.
    """
    T = np.asarray(T, dtype=float)
    omega = np.asarray(omega, dtype=float)
    rho = mech.density(T, p, omega)
    conc = np.maximum(rho[..., None] * omega / mech.mw, _CONC_FLOOR)

    rates = []
    for rxn in mech.reactions:
        k = rxn.rate_constant(T)
        for name, order in rxn.orders.items():
            rate_c = conc[..., mech.index[name]]
            k = k * np.maximum(rate_c, 0.0) ** order
        if rxn.third_body is not None:
            m = conc.sum(axis=-1)
            for name, enh in rxn.third_body.items():
                m = m + (enh - 1.0) * conc[..., mech.index[name]]
            k = k * m
        rates.append(k)
    rate = np.stack(rates, axis=-1)

    src = np.zeros(omega.shape)
    for j, rxn in enumerate(mech.reactions):
        for name, nu in rxn.nu.items():
            i = mech.index[name]
            src[..., i] += nu * mech.mw[i] * rate[..., j]
    h = np.stack([s.h_mass(T) for s in mech.species], axis=-1)
    heat = -np.einsum("...i,...i->...", src, h)
    return {"rate": rate, "src": src, "heat": heat}


def _reactor_rhs(t, y, mech, p):
    omega, T = y[:-1], y[-1]
    out = reaction_rates(mech, T, p, omega)
    rho = mech.density(T, p, omega)
    cp = mech.cp_mass(T, omega)
    domega = out["src"] / rho
    dT = out["heat"] / (rho * cp)
    return np.concatenate([domega, [dT]])


def integrate_reactor(mech: GasMechanism, T0, p, omega0, t_end,
                      rtol=1e-8, atol=1e-14, n_out=400):
    """Adiabatic constant-pressure 0D reactor via a stiff integrator.

    Returns dict with ``t``, ``T``, ``omega`` trajectories (n_out
    sample points) plus the dense solution object under ``sol``.
    """
    y0 = np.concatenate([np.asarray(omega0, dtype=float), [float(T0)]])
    sol = solve_ivp(_reactor_rhs, (0.0, t_end), y0, method="LSODA",
                    args=(mech, p), rtol=rtol, atol=atol,
                    dense_output=True)
    if not sol.success:
        raise RuntimeError(f"reactor integration failed: {sol.message}")
    t = np.linspace(0.0, t_end, n_out)
    y = sol.sol(t)
    return {"t": t, "T": y[-1], "omega": y[:-1].T, "sol": sol}


def _delay_from_trajectory(t, T):
    """Ignition delay: time of steepest temperature rise, refined by a
    parabolic fit through the discrete maximum of dT/dt."""
    dT = np.gradient(T, t)
    k = int(np.argmax(dT))
    if 0 < k < len(t) - 1:
        # vertex of the parabola through the three points around the max
        y0, y1, y2 = dT[k - 1], dT[k], dT[k + 1]
        denom = y0 - 2 * y1 + y2
        if denom != 0:
            return t[k] + 0.5 * (y0 - y2) / denom * (t[k] - t[k - 1])
    return t[k]


def ignition_delay(mech: GasMechanism, T0, p, omega0, t_end,
                   rtol=1e-8, n_out=4000):
    """Ignition delay of the stiff-solver trajectory [s]."""
    res = integrate_reactor(mech, T0, p, omega0, t_end, rtol=rtol,
                            n_out=n_out)
    if res["T"][-1] < T0 + 100.0:
        raise RuntimeError("no ignition within t_end")
    return _delay_from_trajectory(res["t"], res["T"])


def ignition_delay_reference(mech: GasMechanism, T0, p, omega0, t_end,
                             n_steps):
    """Brute-force fixed-step RK4 reference for the ignition delay."""
    dt = t_end / n_steps
    y = np.concatenate([np.asarray(omega0, dtype=float), [float(T0)]])
    t_hist = np.empty(n_steps + 1)
    T_hist = np.empty(n_steps + 1)
    t_hist[0], T_hist[0] = 0.0, T0
    t = 0.0
    for n in range(n_steps):
        k1 = _reactor_rhs(t, y, mech, p)
        k2 = _reactor_rhs(t + dt / 2, y + dt / 2 * k1, mech, p)
        k3 = _reactor_rhs(t + dt / 2, y + dt / 2 * k2, mech, p)
        k4 = _reactor_rhs(t + dt, y + dt * k3, mech, p)
        y = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += dt
        t_hist[n + 1], T_hist[n + 1] = t, y[-1]
    return _delay_from_trajectory(t_hist, T_hist)


def reaction_substep(mech: GasMechanism, T, p, omega, dt, active,
                     rtol=1e-8, atol=1e-14, min_temperature=600.0):
    """Advance chemistry in every active (pure gas) cell over dt.

    ``T`` is (nr, nz); ``omega`` is (nr, nz, n_species); ``active`` is
    a boolean mask (pure-gas fluid cells). Cells colder than
    ``min_temperature`` are skipped — the bundled global mechanisms are
    inert there. Returns (T_new, omega_new).
    """
    T = np.asarray(T, dtype=float).copy()
    omega = np.asarray(omega, dtype=float).copy()
    work = active & (T >= min_temperature)
    # cheap screening: skip cells with negligible instantaneous rates
    if work.any():
        out = reaction_rates(mech, T, p, omega)
        rho = mech.density(T, p, omega)
        cp = mech.cp_mass(T, omega)
        dT_est = np.abs(out["heat"]) * dt / (rho * cp)
        domega_est = np.abs(out["src"]).max(axis=-1) * dt / rho
        work &= (dT_est > 1e-8) | (domega_est > 1e-12)
    for i, j in zip(*np.nonzero(work)):
        y0 = np.concatenate([omega[i, j], [T[i, j]]])
        sol = solve_ivp(_reactor_rhs, (0.0, dt), y0, method="LSODA",
                        args=(mech, p), rtol=rtol, atol=atol)
        if not sol.success:
            raise RuntimeError(
                f"chemistry substep failed in cell ({i},{j}): "
                f"{sol.message}")
        y = sol.y[:, -1]
        omega[i, j] = np.maximum(y[:-1], 0.0)
        omega[i, j] /= omega[i, j].sum()
        T[i, j] = y[-1]
    return T, omega


def spark_patch(mesh, T, center_r, center_z, diameter, T_spark):
    """Force a spherical hot spot: T = max(T, T_spark) within the
    spark region. Returns the patched copy."""
    T = np.asarray(T, dtype=float).copy()
    R, Z = np.meshgrid(mesh.rc, mesh.zc, indexing="ij")
    inside = ((R - center_r) ** 2 + (Z - center_z) ** 2
              <= (0.5 * diameter) ** 2)
    T[inside] = np.maximum(T[inside], T_spark)
    return T


def stoichiometric_mixture(mech: GasMechanism, fuel="CH3OH",
                           x_o2_ambient=0.21):
    """Mass fractions of a stoichiometric fuel/air premixture for the
    bundled methanol mechanism (air = O2/N2)."""
    # CH3OH + 1.5 O2 -> CO2 + 2 H2O
    nu_o2 = 1.5
    x = np.zeros(mech.n_species)
    n_air = nu_o2 / x_o2_ambient
    x[mech.index[fuel]] = 1.0
    x[mech.index["O2"]] = nu_o2
    x[mech.index["N2"]] = n_air - nu_o2
    x /= x.sum()
    return mech.mass_fractions_from_mole(x)
