"""Reaction rates, 0D reactor conservation, and operator-split substep."""

import numpy as np
import pytest
from importlib import resources

from dropflame.constants import R_GAS
from dropflame.kinetics import (ignition_delay, integrate_reactor,
                                reaction_rates, reaction_substep,
                                spark_patch, stoichiometric_mixture)
from dropflame.mesh import build_axi_mesh
from dropflame.thermo import parse_mechanism

DATA = resources.files("dropflame.data")


@pytest.fixture(scope="module")
def mech():
    return parse_mechanism(DATA / "methanol_global.mech")


@pytest.fixture(scope="module")
def toy():
    return parse_mechanism(DATA / "toy3.mech")


def test_rate_constant_and_mass_action(mech):
    # oracle: hand evaluation of reaction 1 at a known state
    T, p = 1400.0, 1.0e5
    omega = stoichiometric_mixture(mech)
    out = reaction_rates(mech, T, p, omega)
    rho = mech.density(T, p, omega)
    c_f = rho * omega[mech.index["CH3OH"]] / 0.032042
    c_o2 = rho * omega[mech.index["O2"]] / 0.031998
    rxn = mech.reactions[0]
    k = rxn.A * np.exp(-rxn.Ea / (R_GAS * T))
    expect = k * c_f**0.25 * c_o2**1.5
    assert out["rate"][0] == pytest.approx(expect, rel=1e-12)
    # no water yet -> CO burnout rate is zero
    assert out["rate"][1] == 0.0


def test_species_sources_balance_mass_and_elements(mech):
    T, p = 1600.0, 1.0e5
    omega = np.full(mech.n_species, 1.0 / mech.n_species)
    out = reaction_rates(mech, T, p, omega)
    # total mass production is zero
    assert out["src"].sum() == pytest.approx(0.0, abs=1e-9)
    # each element is conserved by the stoichiometry
    for el in mech.elements:
        w = np.array([s.composition.get(el, 0)
                      * {"C": 12.011e-3, "H": 1.008e-3, "O": 15.999e-3,
                         "N": 14.007e-3}[el] / s.mw
                      for s in mech.species])
        assert (out["src"] * w).sum() == pytest.approx(0.0, abs=1e-10)


def test_exothermic_heat_release_positive(mech):
    omega = stoichiometric_mixture(mech)
    out = reaction_rates(mech, 1600.0, 1e5, omega)
    assert out["heat"] > 0.0


def test_first_order_decay_matches_exponential(toy):
    # oracle: F => P with k = 1e3 1/s at constant T; the reactor is
    # near-isothermal (small heat release) so omega_F ~ exp(-kt)
    omega0 = np.array([1.0, 0.0, 0.0])
    res = integrate_reactor(toy, 300.0, 1e5, omega0, 2e-3, rtol=1e-10)
    # pick an early sample where self-heating is still negligible
    k = 1e3
    idx = 40
    t = res["t"][idx]
    assert res["omega"][idx, 0] == pytest.approx(np.exp(-k * t), rel=5e-3)


def test_reactor_conserves_elements_and_enthalpy(mech):
    omega0 = stoichiometric_mixture(mech)
    T0, p = 1400.0, 1.0e5
    res = integrate_reactor(mech, T0, p, omega0, 2e-4, rtol=1e-10)
    omega1, T1 = res["omega"][-1], res["T"][-1]
    assert T1 > 2500.0          # ignited
    for el in mech.elements:
        d = abs(mech.element_mass_fractions(omega1, el)
                - mech.element_mass_fractions(omega0, el))
        assert d <= 1e-10
    h0 = mech.h_mass(T0, omega0)
    h1 = mech.h_mass(T1, omega1)
    cp = mech.cp_mass(T0, omega0)
    assert abs(h1 - h0) <= 1e-8 * abs(cp * T0)
    assert omega1.sum() == pytest.approx(1.0, abs=1e-9)


def test_ignition_delay_monotone_in_temperature(mech):
    omega0 = stoichiometric_mixture(mech)
    tau_hot = ignition_delay(mech, 1500.0, 1e5, omega0, 1e-4)
    tau_cold = ignition_delay(mech, 1300.0, 1e5, omega0, 1e-3)
    assert tau_hot < tau_cold


def test_substep_only_touches_active_cells(mech):
    mesh = build_axi_mesh(L=1e-3, H=1e-3, r_fiber=0.0, nr=4, nz=4,
                          geometry="planar")
    T = np.full((4, 4), 1400.0)
    omega = np.tile(stoichiometric_mixture(mech), (4, 4, 1))
    active = np.zeros((4, 4), dtype=bool)
    active[0, 0] = True
    T1, om1 = reaction_substep(mech, T, 1e5, omega, 5e-5, active)
    assert T1[0, 0] > 1500.0          # reacted
    assert np.all(T1[1:, :] == 1400.0)
    assert np.allclose(om1[1:, :], omega[1:, :])


def test_substep_skips_cold_cells(mech):
    mesh = build_axi_mesh(L=1e-3, H=1e-3, r_fiber=0.0, nr=2, nz=2,
                          geometry="planar")
    T = np.full((2, 2), 300.0)
    omega = np.tile(stoichiometric_mixture(mech), (2, 2, 1))
    T1, om1 = reaction_substep(mech, T, 1e5, omega, 1e-4,
                               np.ones((2, 2), dtype=bool))
    assert np.all(T1 == 300.0)


def test_spark_patch_geometry(mech):
    mesh = build_axi_mesh(L=1e-3, H=2e-3, r_fiber=0.0, nr=20, nz=40,
                          geometry="axisymmetric")
    T = np.full((20, 40), 300.0)
    T1 = spark_patch(mesh, T, 0.0, 1e-3, 2.0e-4, 2500.0)
    R, Z = np.meshgrid(mesh.rc, mesh.zc, indexing="ij")
    inside = (R**2 + (Z - 1e-3)**2) <= 1e-4**2
    assert np.all(T1[inside] == 2500.0)
    assert np.all(T1[~inside] == 300.0)
    # hotter ambient is never cooled by the spark
    T2 = spark_patch(mesh, np.full((20, 40), 3000.0), 0.0, 1e-3,
                     2.0e-4, 2500.0)
    assert np.all(T2 == 3000.0)
