import numpy as np
import pytest

from dropflame.mesh import AxiMesh, build_axi_mesh, graded_spacing


def test_basic_geometry_and_solid_mask():
    # 10 mm x 20 mm domain, 0.3 mm fiber, uniform 0.1 mm spacing
    m = build_axi_mesh(L=10e-3, H=20e-3, r_fiber=0.3e-3, dx=0.1e-3,
                       droplet_diameter=1.8e-3)
    assert m.nr == 100 and m.nz == 200
    assert np.all(m.vol > 0)
    assert np.all(m.area_r >= 0)
    assert np.all(m.area_r[0, :] == 0.0)  # axis faces have zero area
    # solid mask spans r < 0.3 mm -> first 3 cell rings
    assert np.all(m.solid[:3, :])
    assert not np.any(m.solid[3:, :])
    # achieved resolution D/dx = 18
    assert m.min_spacing() == pytest.approx(0.1e-3)
    assert 1.8e-3 / m.min_spacing() == pytest.approx(18.0)


def test_closedness():
    m = build_axi_mesh(L=5e-3, H=8e-3, r_fiber=0.3e-3, nr=25, nz=40)
    assert m.closedness_error() < 1e-12


def test_no_fiber_degenerate():
    m = build_axi_mesh(L=5e-3, H=5e-3, r_fiber=0.0, nr=20, nz=20)
    assert not np.any(m.solid)
    fr, fz = m.fiber_faces()
    assert not np.any(fr) and not np.any(fz)


def test_refinement_identity():
    m1 = build_axi_mesh(L=4e-3, H=4e-3, r_fiber=0.0, nr=20, nz=20)
    m2 = build_axi_mesh(L=4e-3, H=4e-3, r_fiber=0.0, nr=40, nz=40)
    assert m2.n_cells == 4 * m1.n_cells
    assert m2.min_spacing() == pytest.approx(0.5 * m1.min_spacing())


def test_invalid_geometry_rejected():
    with pytest.raises(ValueError):
        build_axi_mesh(L=-1.0, H=1.0, r_fiber=0.0, nr=4, nz=4)
    with pytest.raises(ValueError):
        build_axi_mesh(L=1e-3, H=1e-3, r_fiber=2e-3, nr=4, nz=4)


def test_under_resolved_droplet_rejected():
    with pytest.raises(ValueError):
        build_axi_mesh(L=10e-3, H=10e-3, r_fiber=0.0, dx=1e-3,
                       droplet_diameter=1.8e-3)


def test_fiber_faces_match_region_boundary():
    m = build_axi_mesh(L=5e-3, H=5e-3, r_fiber=1.0e-3, nr=25, nz=25)
    fr, fz = m.fiber_faces()
    # vertical fiber spanning the full height: boundary is one r-face ring
    assert fr[5, :].all()
    assert fr.sum() == m.nz
    assert fz.sum() == 0


def test_graded_spacing_properties():
    w = graded_spacing(10e-3, 60, 2e-3, 4e-3, 0.05e-3, ratio=1.15)
    assert len(w) == 60
    assert w.sum() == pytest.approx(10e-3)
    assert np.all(w > 0)
    # neighbouring growth stays within a loose multiple of the ratio
    growth = w[1:] / w[:-1]
    assert growth.max() < 1.5


def test_planar_mesh_volumes():
    m = AxiMesh(rf=np.linspace(0, 1e-2, 11), zf=np.linspace(0, 1e-2, 11),
                solid=np.zeros((10, 10), dtype=bool), geometry="planar")
    assert np.allclose(m.vol, 1e-6)
    assert m.closedness_error() < 1e-15


def test_vtk_dump(tmp_path):
    m = build_axi_mesh(L=1e-3, H=1e-3, r_fiber=0.0, nr=4, nz=4)
    p = tmp_path / "mesh.vtk"
    m.dump_vtk(p, fields={"alpha": np.zeros((4, 4))})
    text = p.read_text()
    assert "RECTILINEAR_GRID" in text
    assert "alpha" in text
