"""Mechanism parsing, polynomial thermo, and gas mixture properties."""

import numpy as np
import pytest
from importlib import resources

from dropflame.constants import R_GAS
from dropflame.thermo import (MechanismError, gas_mixture_properties,
                              parse_mechanism)

DATA = resources.files("dropflame.data")


@pytest.fixture(scope="module")
def mech():
    return parse_mechanism(DATA / "methanol_global.mech")


@pytest.fixture(scope="module")
def toy():
    return parse_mechanism(DATA / "toy3.mech")


def test_species_roster(mech):
    assert mech.names == ["CH3OH", "O2", "H2O", "CO", "CO2", "N2"]
    assert mech.elements == ["C", "H", "O", "N"]
    assert len(mech.reactions) == 2


def test_formation_enthalpies(mech):
    # oracle: standard formation enthalpies at 298.15 K (J/mol)
    for name, hf in [("CH3OH", -201000.0), ("H2O", -241826.0),
                     ("CO", -110530.0), ("CO2", -393522.0),
                     ("O2", 0.0), ("N2", 0.0)]:
        assert mech[name].h_mole(298.15) == pytest.approx(hf, abs=0.5)


def test_cp_continuous_at_switch(mech):
    for s in mech.species:
        lo = s.cp_mole(s.tswitch - 1e-9)
        hi = s.cp_mole(s.tswitch + 1e-9)
        assert abs(lo - hi) < 1e-4 * abs(hi)


def test_cp_h_consistency(mech):
    # dH/dT == Cp (finite-difference check)
    s = mech["CO2"]
    T = 900.0
    dT = 1e-3
    dh = (s.h_mole(T + dT) - s.h_mole(T - dT)) / (2 * dT)
    assert dh == pytest.approx(s.cp_mole(T), rel=1e-8)


def test_reaction_element_balance_enforced(tmp_path, toy):
    # bundled mechanisms validate; a broken one is rejected with context
    bad = tmp_path / "bad.mech"
    text = (DATA / "toy3.mech").read_text()
    bad.write_text(text.replace("REACTION F => P",
                                "REACTION F => D"))
    with pytest.raises(MechanismError, match="unbalanced in X"):
        parse_mechanism(bad)


def test_parse_error_reports_line(tmp_path):
    bad = tmp_path / "bad.mech"
    bad.write_text("ELEMENTS X\nSPECIES F\n  mw not_a_number\nEND\n")
    with pytest.raises(MechanismError, match="line 3"):
        parse_mechanism(bad)


def test_missing_arrhenius_rejected(tmp_path):
    bad = tmp_path / "bad.mech"
    text = (DATA / "toy3.mech").read_text()
    bad.write_text(text.replace("  arrhenius A=1.0e3 b=0.0 Ea=0.0\n", ""))
    with pytest.raises(MechanismError, match="arrhenius"):
        parse_mechanism(bad)


def test_ideal_gas_density(mech):
    # oracle: rho = p M / (R T) for pure N2, M = 0.028014 kg/mol
    omega = np.zeros(mech.n_species)
    omega[mech.index["N2"]] = 1.0
    rho = mech.density(300.0, 1.0e5, omega)
    assert rho == pytest.approx(1.0e5 * 0.028014 / (R_GAS * 300.0),
                                rel=1e-12)


def test_mean_molar_mass_air(mech):
    omega = np.zeros(mech.n_species)
    omega[mech.index["O2"]] = 0.233
    omega[mech.index["N2"]] = 0.767
    # oracle: 1/M = 0.233/0.031998 + 0.767/0.028014
    assert mech.mean_mw(omega) == pytest.approx(
        1.0 / (0.233 / 0.031998 + 0.767 / 0.028014), rel=1e-12)


def test_mole_mass_roundtrip(mech):
    rng = np.random.default_rng(7)
    omega = rng.random((4, mech.n_species))
    omega /= omega.sum(axis=-1, keepdims=True)
    x = mech.mole_fractions(omega)
    back = mech.mass_fractions_from_mole(x)
    assert np.allclose(back, omega, atol=1e-14)
    assert np.allclose(x.sum(axis=-1), 1.0)


def test_mixture_cp_mass_weighted(mech):
    omega = np.zeros(mech.n_species)
    omega[mech.index["O2"]] = 0.4
    omega[mech.index["CO2"]] = 0.6
    T = 500.0
    expect = (0.4 * mech["O2"].cp_mass(T) + 0.6 * mech["CO2"].cp_mass(T))
    assert mech.cp_mass(T, omega) == pytest.approx(expect, rel=1e-12)


def test_transport_power_laws(mech):
    s = mech["N2"]
    assert s.mu(300.0) == pytest.approx(1.78e-5, rel=1e-12)
    assert s.mu(600.0) == pytest.approx(1.78e-5 * 2.0 ** 0.7, rel=1e-12)
    assert s.diff(300.0, 2.0e5) == pytest.approx(1.0e-5, rel=1e-12)


def test_mixture_properties_bundle(mech):
    omega = np.zeros((3, 2, mech.n_species))
    omega[..., mech.index["O2"]] = 0.233
    omega[..., mech.index["N2"]] = 0.767
    T = np.full((3, 2), 400.0)
    props = gas_mixture_properties(T, 101325.0, omega, mech)
    assert props["rho"].shape == (3, 2)
    assert props["D"].shape == (3, 2, mech.n_species)
    assert np.all(props["mu"] > 0) and np.all(props["k"] > 0)
    # constant-Lewis override
    props_le = gas_mixture_properties(T, 101325.0, omega, mech,
                                      lewis={"CH3OH": 1.0})
    alpha = props_le["k"] / (props_le["rho"] * props_le["cp"])
    assert np.allclose(props_le["D"][..., mech.index["CH3OH"]], alpha)


def test_temperature_range_enforced(mech):
    omega = np.zeros(mech.n_species)
    omega[mech.index["N2"]] = 1.0
    with pytest.raises(ValueError, match="validity"):
        gas_mixture_properties(5000.0, 1e5, omega, mech)


def test_element_mass_fractions(mech):
    omega = np.zeros(mech.n_species)
    omega[mech.index["CH3OH"]] = 1.0
    # oracle: methanol is CH4O, carbon fraction 12.011/32.042
    assert mech.element_mass_fractions(omega, "C") == pytest.approx(
        12.011e-3 / 0.032042, rel=1e-6)
    assert mech.element_mass_fractions(omega, "H") == pytest.approx(
        4 * 1.008e-3 / 0.032042, rel=1e-6)


def test_arrhenius_rate_constant(mech):
    rxn = mech.reactions[0]
    T = 1400.0
    assert rxn.rate_constant(T) == pytest.approx(
        rxn.A * np.exp(-rxn.Ea / (R_GAS * T)), rel=1e-12)
    assert rxn.orders == {"CH3OH": 0.25, "O2": 1.5}


def test_third_body_parsed(toy):
    r2 = toy.reactions[1]
    assert r2.third_body == {"D": 2.0}
    assert toy.reactions[0].third_body is None
    # net stoichiometry of P + P + M => D + M
    assert r2.nu == {"P": -2.0, "D": 1.0}
