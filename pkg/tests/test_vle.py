"""Liquid properties, activity models, and interface equilibrium."""

import numpy as np
import pytest
from importlib import resources

from dropflame.liquid import LiquidPropertyError, parse_liquids
from dropflame.thermo import parse_mechanism
from dropflame.vle import (IdealSolution, MargulesBinary,
                           bubble_point_temperature,
                           equilibrium_gas_composition,
                           mole_from_mass_liquid)

DATA = resources.files("dropflame.data")


@pytest.fixture(scope="module")
def mech():
    return parse_mechanism(DATA / "methanol_global.mech")


@pytest.fixture(scope="module")
def liquids():
    return parse_liquids(names=["CH3OH", "H2O"])


def ambient(mech):
    omega = np.zeros(mech.n_species)
    omega[mech.index["O2"]] = 0.233
    omega[mech.index["N2"]] = 0.767
    return omega


def test_liquid_anchor_values(liquids):
    meoh = liquids["CH3OH"]
    # oracle: handbook methanol near 298 K
    assert meoh.rho(298.15) == pytest.approx(791.5, abs=5.0)
    assert meoh.cp(298.15) == pytest.approx(2545.0, abs=50.0)
    assert meoh.mu(298.15) == pytest.approx(5.4e-4, rel=0.05)
    assert meoh.dh_ev(298.15) == pytest.approx(1.165e6, rel=0.02)
    water = liquids["H2O"]
    assert water.rho(298.15) == pytest.approx(1000.0, abs=5.0)
    assert water.dh_ev(373.15) == pytest.approx(2.257e6, rel=0.02)


def test_boiling_temperatures(liquids):
    # oracle: normal boiling points, methanol 337.8 K, water 373.15 K
    assert liquids["CH3OH"].boiling_temperature(101325.0) == pytest.approx(
        337.8, abs=0.5)
    assert liquids["H2O"].boiling_temperature(101325.0) == pytest.approx(
        373.15, abs=0.5)


def test_psat_antoine_inverse_consistent(liquids):
    liq = liquids["CH3OH"]
    T = 320.0
    assert liq.boiling_temperature(liq.p_sat(T)) == pytest.approx(
        T, abs=1e-9)


def test_range_enforced(liquids):
    with pytest.raises(LiquidPropertyError, match="range"):
        liquids["CH3OH"].rho(600.0)


def test_parse_errors(tmp_path):
    bad = tmp_path / "bad.props"
    bad.write_text("LIQUID A\n  rho 1.0\nEND\n")
    with pytest.raises(LiquidPropertyError, match="line 2"):
        parse_liquids(bad)
    with pytest.raises(LiquidPropertyError, match="no correlations"):
        parse_liquids(names=["C8H18"])


def test_mole_from_mass(liquids, mech):
    # oracle: 50/50 by mass methanol/water
    x = mole_from_mass_liquid([0.5, 0.5], liquids, mech)
    n_m, n_w = 0.5 / 0.032042, 0.5 / 0.018015
    assert x[0] == pytest.approx(n_m / (n_m + n_w), rel=1e-12)
    assert x.sum() == pytest.approx(1.0)


def test_raoult_pure_methanol(liquids, mech):
    # oracle: x_G = p_sat(T)/p for a pure liquid, ~0.477 at 320 K, 1 atm
    liq = parse_liquids(names=["CH3OH"])
    res = equilibrium_gas_composition(320.0, 101325.0, [1.0], liq, mech,
                                      ambient_omega=ambient(mech))
    psat = liq["CH3OH"].p_sat(320.0)
    assert res["x"][mech.index["CH3OH"]] == pytest.approx(
        psat / 101325.0, rel=1e-12)
    assert res["x"][mech.index["CH3OH"]] == pytest.approx(0.477, abs=0.01)
    assert not res["saturated"]
    # remainder keeps the ambient O2:N2 mole ratio
    x = res["x"]
    amb_x = mech.mole_fractions(ambient(mech))
    assert (x[mech.index["O2"]] / x[mech.index["N2"]]
            == pytest.approx(amb_x[mech.index["O2"]]
                             / amb_x[mech.index["N2"]], rel=1e-12))
    assert x.sum() == pytest.approx(1.0)
    assert res["omega"].sum() == pytest.approx(1.0)


def test_saturated_flag_at_boiling(liquids, mech):
    liq = parse_liquids(names=["CH3OH"])
    tb = liq["CH3OH"].boiling_temperature(101325.0)
    res = equilibrium_gas_composition(tb + 0.5, 101325.0, [1.0], liq, mech,
                                      ambient_omega=ambient(mech))
    assert res["saturated"]
    assert res["x"][mech.index["CH3OH"]] == pytest.approx(1.0)


def test_bubble_point_pure_matches_antoine(liquids, mech):
    liq = parse_liquids(names=["CH3OH"])
    tb = bubble_point_temperature(101325.0, [1.0], liq, mech)
    assert tb == pytest.approx(liq["CH3OH"].boiling_temperature(101325.0),
                               abs=1e-4)


def test_bubble_point_mixture_bracketed(liquids, mech):
    # ideal binary: bubble point lies between the pure boiling points
    tb_m = liquids["CH3OH"].boiling_temperature(101325.0)
    tb_w = liquids["H2O"].boiling_temperature(101325.0)
    tb = bubble_point_temperature(101325.0, [0.5, 0.5], liquids, mech)
    assert tb_m < tb < tb_w
    # residual really is zero there: sum x gamma psat = p
    x = mole_from_mass_liquid([0.5, 0.5], liquids, mech)
    total = sum(x[i] * liquids.liquids[i].p_sat(tb) for i in range(2))
    assert total == pytest.approx(101325.0, rel=1e-6)


def test_margules_limits(liquids, mech):
    m = MargulesBinary(A12=0.8, A21=0.6)
    # infinite-dilution oracle: gamma_1 -> exp(A12), gamma_2 -> exp(A21)
    g = m.gamma(np.array([0.0, 1.0]), 300.0)
    assert g[0] == pytest.approx(np.exp(0.8), rel=1e-12)
    assert g[1] == pytest.approx(1.0, rel=1e-12)
    g = m.gamma(np.array([1.0, 0.0]), 300.0)
    assert g[1] == pytest.approx(np.exp(0.6), rel=1e-12)
    # pure-component limit: gamma = 1 for the abundant species
    assert IdealSolution().gamma(np.array([0.3, 0.7]), 300.0).tolist() \
        == [1.0, 1.0]


def test_positive_activity_raises_bubble_point(liquids, mech):
    # positive deviations increase total vapor pressure -> lower T_b
    ideal = bubble_point_temperature(101325.0, [0.5, 0.5], liquids, mech)
    nonideal = bubble_point_temperature(
        101325.0, [0.5, 0.5], liquids, mech,
        activity=MargulesBinary(A12=0.8, A21=0.6))
    assert nonideal < ideal


def test_mixture_latent_heat_weighted(liquids):
    dh = liquids.dh_ev(320.0, [0.3, 0.7])
    expect = (0.3 * liquids["CH3OH"].dh_ev(320.0)
              + 0.7 * liquids["H2O"].dh_ev(320.0))
    assert dh == pytest.approx(expect, rel=1e-12)
