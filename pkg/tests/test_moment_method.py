import math

import numpy as np
import pytest

from curiesnap import moment_method as mm
from curiesnap.errors import InvalidInputError, NumericalFailure, SingularityError
from curiesnap.magnetics import MagnetSpec, SheetPairGeometry
from curiesnap.materials import ThermoMagneticMaterial

GEOM = SheetPairGeometry(sheet_offset=0.0)
MAT = ThermoMagneticMaterial()


def test_mesh_single_cell():
    mesh = mm.mesh_sheet(GEOM, "top", 1, 1, 1)
    np.testing.assert_allclose(mesh.centers, [[0.0, 0.0, 0.0105]], atol=1e-15)
    assert mesh.volumes[0] == pytest.approx(0.02 * 0.02 * 0.001, rel=1e-12)


def test_mesh_partition_volume():
    mesh = mm.mesh_sheet(GEOM, "bottom", 2, 2, 2)
    assert len(mesh) == 8
    assert mesh.volumes.sum() == pytest.approx(0.02 * 0.02 * 0.001, rel=1e-12)
    assert np.all(mesh.centers[:, 2] < -GEOM.half_gap)


def test_mesh_lattice_3_2_1():
    mesh = mm.mesh_sheet(GEOM, "top", 3, 2, 1)
    xs = sorted(set(np.round(mesh.centers[:, 0], 12)))
    ys = sorted(set(np.round(mesh.centers[:, 1], 12)))
    np.testing.assert_allclose(xs, [-0.02 / 3, 0.0, 0.02 / 3], atol=1e-12)
    np.testing.assert_allclose(ys, [-0.005, 0.005], atol=1e-12)
    np.testing.assert_allclose(mesh.sizes, np.tile([0.02 / 3, 0.01, 0.001], (6, 1)), rtol=1e-12)


def test_mesh_zero_counts():
    with pytest.raises(InvalidInputError):
        mm.mesh_sheet(GEOM, "top", 0, 1, 1)


def test_applied_field_axial_and_equatorial():
    dip = mm.PointDipole((0, 0, 0), (0, 0, 0.1))
    axial = mm.applied_field(dip, (0, 0, 0.01))
    np.testing.assert_allclose(axial, [0, 0, 2 * 0.1 / (4 * math.pi * 1e-6)], atol=1e-9)
    assert axial[2] == pytest.approx(15915.5, rel=1e-5)
    eq = mm.applied_field(dip, (0.01, 0, 0))
    np.testing.assert_allclose(eq, [0, 0, -axial[2] / 2], atol=1e-9)
    far = mm.applied_field(dip, (0, 0, 0.02))
    assert far[2] / axial[2] == pytest.approx(1 / 8, rel=1e-14)
    with pytest.raises(SingularityError):
        mm.applied_field(dip, (0, 0, 0))


def test_cube_self_block():
    mesh = mm.mesh_box((0, 0, 0), (1e-3, 1e-3, 1e-3), (1, 1, 1))
    for kernel in mm.KERNELS:
        np.testing.assert_allclose(mm.assemble_system(mesh, kernel), -np.eye(3) / 3, atol=1e-14)


def test_demag_factors():
    np.testing.assert_allclose(mm.demag_factors([1, 1, 1]), [[1 / 3] * 3], atol=1e-14)
    for size in ([1, 2, 3], [20, 20, 1], [1, 1, 2]):
        n = mm.demag_factors(size)[0]
        assert n.sum() == pytest.approx(1.0, abs=1e-12)
        # oracle: average the point tensor over the cell volume
        g = (np.arange(24) + 0.5) / 24 - 0.5
        pts = np.stack(np.meshgrid(*(g * s for s in size), indexing="ij"), -1).reshape(-1, 3)
        avg = mm.prism_field_tensor(pts, np.asarray(size, float)).mean(axis=0)
        np.testing.assert_allclose(n, np.diag(avg), atol=5e-3)


def test_prism_tensor_against_surface_charge_integral():
    # z-magnetized prism == charge sheets +/-M on its top/bottom faces
    size = np.array([2e-3, 1e-3, 0.5e-3])
    point = np.array([1.7e-3, -0.9e-3, 1.1e-3])
    n = 600
    u = ((np.arange(n) + 0.5) / n - 0.5) * size[0]
    v = ((np.arange(n) + 0.5) / n - 0.5) * size[1]
    uu, vv = np.meshgrid(u, v, indexing="ij")
    da = (size[0] / n) * (size[1] / n)
    h = np.zeros(3)
    for sign in (1.0, -1.0):
        r = np.stack([point[0] - uu, point[1] - vv, np.full_like(uu, point[2] - sign * size[2] / 2)], -1)
        d3 = np.linalg.norm(r, axis=-1) ** 3
        h += sign * (r / d3[..., None]).sum(axis=(0, 1)) * da / (4 * math.pi)
    tensor = mm.prism_field_tensor(point, size)
    np.testing.assert_allclose(-tensor[:, 2], h, rtol=1e-4, atol=1e-7 * np.abs(h).max())


def test_kernel_symmetry_and_far_field():
    mesh = mm.CellMesh([[0, 0, 0], [0.05, 0, 0]], [[1e-3] * 3] * 2)
    for kernel in mm.KERNELS:
        k = mm.assemble_system(mesh, kernel)
        np.testing.assert_allclose(k[0:3, 3:6], k[3:6, 0:3], rtol=1e-12, atol=0)
        expected = 1e-9 / (4 * math.pi * 0.05**3) * np.diag([2.0, -1.0, -1.0])
        np.testing.assert_allclose(k[0:3, 3:6], expected, rtol=1e-3, atol=1e-6 * expected[0, 0])


def test_overlapping_cells_rejected():
    mesh = mm.CellMesh([[0, 0, 0], [0.5e-3, 0, 0]], [[1e-3] * 3] * 2)
    with pytest.raises(InvalidInputError):
        mm.assemble_system(mesh)


def test_single_cube_closed_form():
    mesh = mm.mesh_box((0, 0, 0), (1e-3, 1e-3, 1e-3), (1, 1, 1))
    op = mm.assemble_system(mesh)
    h = np.array([[120.0, -40.0, 300.0]])
    for chi in (0.5, 49.0, 999.0):
        m, res = mm.solve_linear(mesh, op, chi, h)
        np.testing.assert_allclose(m, chi * h / (1 + chi / 3), rtol=1e-10)
        assert res <= 1e-10


def _dipole_kernel_oracle(r):
    d = math.sqrt(sum(c * c for c in r))
    out = np.empty((3, 3))
    for a in range(3):
        for b in range(3):
            out[a, b] = (3 * r[a] * r[b] / d**2 - (a == b)) / (4 * math.pi * d**3)
    return out


def test_two_cell_against_direct_inversion():
    a = 1e-3
    centers = np.array([[0.0, 0.0, 0.0], [1.3e-3, 0.4e-3, -0.2e-3]])
    mesh = mm.CellMesh(centers, [[a, a, a]] * 2)
    dip = mm.PointDipole((0, 0, 4e-3), (0, 0, 0.1))
    chi = 7.5
    h = mm.applied_field(dip, centers)

    big = np.zeros((6, 6))
    for i in range(2):
        big[3 * i:3 * i + 3, 3 * i:3 * i + 3] = -np.eye(3) / 3
    v = a**3
    r = centers[0] - centers[1]
    big[0:3, 3:6] = _dipole_kernel_oracle(r) * v
    big[3:6, 0:3] = _dipole_kernel_oracle(-r) * v
    oracle = np.linalg.inv(np.eye(6) - chi * big) @ (chi * h.reshape(6))
    m, _ = mm.solve_linear(mesh, mm.assemble_system(mesh, "dipole"), chi, h)
    np.testing.assert_allclose(m.reshape(6), oracle, rtol=1e-10)

    # prism kernel: oracle built from the point tensors by hand
    big_p = np.zeros((6, 6))
    for i in range(2):
        for j in range(2):
            big_p[3 * i:3 * i + 3, 3 * j:3 * j + 3] = -mm.prism_field_tensor(centers[i] - centers[j], np.array([a, a, a]))
    oracle_p = np.linalg.inv(np.eye(6) - chi * big_p) @ (chi * h.reshape(6))
    m_p, _ = mm.solve_linear(mesh, mm.assemble_system(mesh, "prism"), chi, h)
    np.testing.assert_allclose(m_p.reshape(6), oracle_p, rtol=1e-10)


def test_above_curie_zero_magnetization():
    mesh = mm.mesh_sheet(GEOM, "top", 3, 3, 1)
    sol = mm.solve_magnetization(mesh, mm.PointDipole.from_magnet(MagnetSpec(), 0.0), 46.0, MAT)
    assert np.all(sol.magnetization == 0.0) and sol.residual_norm == 0.0
    assert np.all(mm.force_on_magnet(mesh, sol, mm.PointDipole.from_magnet(MagnetSpec(), 0.0)) == 0.0)


def test_singular_system_reports_condition():
    mesh = mm.mesh_box((0, 0, 0), (1e-3, 1e-3, 1e-3), (1, 1, 1))
    with pytest.raises(NumericalFailure) as info:
        mm.solve_linear(mesh, mm.assemble_system(mesh), -3.0, np.array([[0.0, 0.0, 1.0]]))
    assert info.value.condition is not None


def _pair_mesh(n=(4, 4, 1)):
    return mm.merge_meshes([mm.mesh_sheet(GEOM, s, *n) for s in ("top", "bottom")])


def test_centered_magnet_force_cancels():
    mesh = _pair_mesh()
    dip = mm.PointDipole.from_magnet(MagnetSpec(), 0.0)
    sol = mm.solve_magnetization(mesh, dip, 40.0, MAT)
    per_cell = mm.dipole_pair_force(mm.cell_moments(mesh, sol), mesh.centers, dip.moment, dip.position)
    total = per_cell.sum(axis=0)
    assert abs(total[2]) <= 1e-10 * np.abs(per_cell[:, 2]).sum()


def test_action_reaction_and_linearity():
    mesh = _pair_mesh()
    op = mm.assemble_system(mesh)
    dip = mm.PointDipole.from_magnet(MagnetSpec(), 0.003)
    sol = mm.solve_magnetization(mesh, dip, 41.0, MAT, op)
    f = mm.force_on_magnet(mesh, sol, dip)
    reaction = mm.forces_on_cells(mesh, sol, dip).sum(axis=0)
    np.testing.assert_allclose(f, -reaction, rtol=1e-10, atol=1e-10 * np.abs(f).max())

    dip2 = mm.PointDipole(dip.position, 2 * dip.moment)
    sol2 = mm.solve_magnetization(mesh, dip2, 41.0, MAT, op)
    np.testing.assert_allclose(sol2.magnetization, 2 * sol.magnetization, rtol=1e-9, atol=1e-9 * np.abs(sol.magnetization).max())
    np.testing.assert_allclose(mm.force_on_magnet(mesh, sol2, dip2), 4 * f, rtol=1e-9, atol=1e-9 * np.abs(f).max())


def test_weak_susceptibility_limit():
    mesh = _pair_mesh()
    dip = mm.PointDipole.from_magnet(MagnetSpec(), 0.002)
    h = mm.applied_field(dip, mesh.centers)
    chi = 1e-4
    m, _ = mm.solve_linear(mesh, mm.assemble_system(mesh), chi, h)
    np.testing.assert_allclose(m, chi * h, rtol=1e-3, atol=1e-3 * chi * np.abs(h).max())


def test_axial_forces_match_single_solves():
    mesh = _pair_mesh((3, 3, 1))
    op = mm.assemble_system(mesh)
    chi = 20.0
    zs = np.array([-0.004, 0.001, 0.005])
    fast = mm.axial_forces_along_axis(mesh, op, MagnetSpec(), zs, chi)
    for z, f in zip(zs, fast):
        dip = mm.PointDipole.from_magnet(MagnetSpec(), z)
        m, _ = mm.solve_linear(mesh, op, chi, mm.applied_field(dip, mesh.centers))
        direct = mm.force_on_magnet(mesh, mm.MagnetizationSolution(m, 0.0), dip)[2]
        assert f == pytest.approx(direct, rel=1e-10)


def _acceptance_force(counts):
    geom = SheetPairGeometry(sheet_offset=0.0, half_gap=0.010, sheet_width=0.02, sheet_height=0.02, sheet_thickness=0.001)
    mesh = mm.mesh_sheet(geom, "top", *counts)
    dip = mm.PointDipole((0, 0, 0), (0, 0, 0.1))
    h = mm.applied_field(dip, mesh.centers)
    m, _ = mm.solve_linear(mesh, mm.assemble_system(mesh), 999.0, h)
    return mm.force_on_magnet(mesh, mm.MagnetizationSolution(m, 0.0), dip)[2]


def test_mesh_refinement_changes_shrink():
    forces = [_acceptance_force(c) for c in ((5, 5, 1), (10, 10, 1), (20, 20, 2))]
    steps = np.abs(np.diff(forces))
    assert steps[1] < steps[0]
