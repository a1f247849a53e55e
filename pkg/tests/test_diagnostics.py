"""Mixture-fraction analysis, geometry metrics and Richardson
extrapolation."""

import numpy as np
import pytest
from importlib import resources

from dropflame.diagnostics import (TimeSeries, bilger_beta,
                                   bilger_beta_from_composition,
                                   element_mass_fractions,
                                   flame_and_droplet_geometry,
                                   mixture_fraction,
                                   richardson_extrapolate,
                                   scalar_dissipation,
                                   stoichiometric_Z, t_z_scatter)
from dropflame.mesh import AxiMesh, build_axi_mesh
from dropflame.thermo import parse_mechanism


@pytest.fixture(scope="module")
def mech():
    path = resources.files("dropflame.data") / "methanol_global.mech"
    return parse_mechanism(path)


def _pure(mech, name):
    w = np.zeros(mech.n_species)
    w[mech.index[name]] = 1.0
    return w


def test_element_fractions_methanol(mech):
    # [DERIVED] CH3OH: 12/32 C, 4/32 H, 16/32 O (integer masses; the
    # standard atomic masses reproduce them to 4 decimal places)
    w = element_mass_fractions(_pure(mech, "CH3OH"), mech)
    assert w["C"] == pytest.approx(0.375, abs=1e-3)
    assert w["H"] == pytest.approx(0.125, abs=1e-3)
    assert w["O"] == pytest.approx(0.500, abs=1e-3)
    assert sum(w.values()) == pytest.approx(1.0, abs=1e-12)


def test_element_fractions_trivial(mech):
    w = element_mass_fractions(_pure(mech, "O2"), mech)
    assert w["O"] == pytest.approx(1.0, abs=1e-12)
    assert w["C"] == w["H"] == 0.0
    w = element_mass_fractions(_pure(mech, "N2"), mech)
    assert w["C"] == w["H"] == w["O"] == 0.0
    assert w["N"] == pytest.approx(1.0, abs=1e-12)


def test_bilger_beta_pure_o2():
    # [DERIVED] beta(O2) = -1/16 mol/g
    assert bilger_beta(0.0, 0.0, 1.0) == pytest.approx(-0.0625,
                                                       rel=1e-14)


def test_mixture_fraction_endpoints(mech):
    w_fuel = _pure(mech, "CH3OH")
    w_air = np.zeros(mech.n_species)
    w_air[mech.index["O2"]] = 0.233
    w_air[mech.index["N2"]] = 0.767
    b_f = bilger_beta_from_composition(w_fuel, mech)
    b_o = bilger_beta_from_composition(w_air, mech)
    assert mixture_fraction(b_f, b_f, b_o) == pytest.approx(1.0)
    assert mixture_fraction(b_o, b_f, b_o) == pytest.approx(0.0)
    # [DERIVED] pure methanol vs standard air: Z_st ~ 0.134
    z_st = stoichiometric_Z(b_f, b_o)
    assert z_st == pytest.approx(0.134, abs=0.002)
    assert 0.0 < z_st < 1.0
    with pytest.raises(ValueError):
        mixture_fraction(b_f, b_o, b_o)


def test_mixture_fraction_linearity(mech):
    rng = np.random.default_rng(8)
    wa = rng.random(mech.n_species)
    wa /= wa.sum()
    wb = rng.random(mech.n_species)
    wb /= wb.sum()
    b_f = bilger_beta_from_composition(_pure(mech, "CH3OH"), mech)
    b_o = -0.01
    lam = 0.3
    z_mix = mixture_fraction(
        bilger_beta_from_composition(lam * wa + (1 - lam) * wb, mech),
        b_f, b_o)
    z_a = mixture_fraction(bilger_beta_from_composition(wa, mech),
                           b_f, b_o)
    z_b = mixture_fraction(bilger_beta_from_composition(wb, mech),
                           b_f, b_o)
    assert z_mix == pytest.approx(lam * z_a + (1 - lam) * z_b,
                                  abs=1e-12)


def _planar(nr, nz, L=1e-3, H=1e-3):
    rf = np.linspace(0.0, L, nr + 1)
    zf = np.linspace(0.0, H, nz + 1)
    return AxiMesh(rf=rf, zf=zf, solid=np.zeros((nr, nz), dtype=bool),
                   geometry="planar")


def test_scalar_dissipation():
    mesh = _planar(8, 20)
    # [TRIVIAL] uniform Z
    chi = scalar_dissipation(mesh, np.full(mesh.vol.shape, 0.3), 1e-5)
    assert np.allclose(chi, 0.0)
    # [DERIVED] slope 100 1/m, D = 1e-5: chi = 0.2 1/s
    Z = 100.0 * mesh.zc[None, :] * np.ones((8, 1))
    chi = scalar_dissipation(mesh, Z, 1e-5)
    assert np.allclose(chi[:, 1:-1], 0.2, rtol=1e-12)


def test_droplet_diameter_definition():
    # [TRIVIAL] D_dr = (6 V / pi)^(1/3) by definition
    mesh = build_axi_mesh(L=2e-3, H=2e-3, r_fiber=0.0, nr=40, nz=40)
    R = 0.5e-3
    r2 = (mesh.rc[:, None] ** 2
          + (mesh.zc[None, :] - 1e-3) ** 2)
    alpha = (r2 <= R ** 2).astype(float)
    from dropflame.vof import liquid_volume
    v = liquid_volume(mesh, alpha)
    out = flame_and_droplet_geometry(mesh, np.zeros(mesh.vol.shape),
                                     0.1, alpha, D0=2 * R)
    assert out["D_dr"] == pytest.approx((6 * v / np.pi) ** (1 / 3),
                                        rel=1e-12)
    # resolution-limited match to the exact sphere
    assert out["D_dr"] == pytest.approx(2 * R, rel=0.01)
    assert out["DD0_sq"] == pytest.approx((out["D_dr"] / (2 * R)) ** 2)


def test_flame_diameter_circular_isoline():
    # [DERIVED] circular Z_st isoline of radius R -> D_fl = 2R within
    # one cell
    mesh = build_axi_mesh(L=4e-3, H=4e-3, r_fiber=0.0, nr=80, nz=80)
    R = 1.2e-3
    rr = np.hypot(mesh.rc[:, None], mesh.zc[None, :] - 2e-3)
    Z = np.clip(1.0 - rr / (2 * R), 0.0, 1.0)   # Z = Z_st at r = R
    alpha = np.zeros(mesh.vol.shape)
    alpha[0, 40] = 1.0                          # token liquid cell
    out = flame_and_droplet_geometry(mesh, Z, 0.5, alpha)
    assert out["D_fl"] == pytest.approx(2 * R, abs=mesh.dr[0])
    assert out["standoff"] == out["D_fl"] / out["D_dr"]


def test_no_liquid_terminates():
    mesh = _planar(4, 4)
    with pytest.raises(ValueError):
        flame_and_droplet_geometry(mesh, np.zeros(mesh.vol.shape), 0.1,
                                   np.zeros(mesh.vol.shape))


def test_scatter_gas_cells_only():
    mesh = build_axi_mesh(L=1e-3, H=1e-3, r_fiber=2e-4, nr=10, nz=10)
    alpha = np.zeros(mesh.vol.shape)
    alpha[4, 4] = 0.5
    Z = np.random.default_rng(1).random(mesh.vol.shape)
    T = 300.0 + 100.0 * Z
    chi = np.zeros(mesh.vol.shape)
    sc = t_z_scatter(mesh, Z, T, chi, alpha)
    n_gas = np.count_nonzero((alpha <= 1e-9) & ~mesh.solid)
    assert sc.shape == (n_gas, 3)


def test_time_series_roundtrip(tmp_path):
    ts = TimeSeries()
    ts.append(t=0.0, D_dr=1e-3, DD0_sq=1.0, T_max=300.0)
    ts.append(t=1e-3, D_dr=0.9e-3, DD0_sq=0.81, T_max=1900.0,
              D_fl=5e-3, standoff=5.56, omega_l_water=0.02)
    path = tmp_path / "series.csv"
    ts.write(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0].startswith("t,D_dr,DD0_sq")
    assert len(lines) == 3
    assert lines[1].split(",")[3] == "300.0"


def test_richardson_manufactured():
    # [DERIVED] exact model f = f_inf + C h^p recovered
    f_inf, C, p = 5.0, 3.0, 2.2
    cells = (37e3, 92e3, 160e3)
    h = np.array(cells) ** (-0.5)
    f = f_inf + C * h ** p
    out = richardson_extrapolate(tuple(f), cells, dim=2)
    assert out["status"] == "ok"
    assert out["order"] == pytest.approx(p, rel=1e-8)
    assert out["f_inf"] == pytest.approx(f_inf, rel=1e-10)


def test_richardson_degenerate_and_oscillatory():
    out = richardson_extrapolate((2.0, 2.0, 2.0), (1e3, 2e3, 4e3))
    assert out["status"] == "indeterminate"
    assert out["f_inf"] == 2.0
    out = richardson_extrapolate((1.0, 2.0, 1.5), (1e3, 2e3, 4e3))
    assert out["status"] == "oscillatory"
