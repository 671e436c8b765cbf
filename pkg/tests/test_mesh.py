import numpy as np
import pytest

from wulffcurv.errors import ProjectionFailure, TopologyError
from wulffcurv.geometry import RadialGraph, Sphere
from wulffcurv.mesh import (SurfaceMesh, build_mesh, icosphere, read_obj, write_obj,
                            write_vertex_scalars)

from conftest import cached_grid, cached_mesh


@pytest.mark.parametrize("subdiv", range(4))
def test_icosphere_counts(subdiv):
    v, f = icosphere(subdiv)
    assert len(f) == 20 * 4 ** subdiv
    assert len(v) == 10 * 4 ** subdiv + 2
    np.testing.assert_allclose(np.linalg.norm(v, axis=1), 1.0, atol=1e-15)


def test_icosphere_outward():
    v, f = icosphere(2)
    a, b, c = v[f[:, 0]], v[f[:, 1]], v[f[:, 2]]
    n = np.cross(b - a, c - a)
    assert np.all(np.sum(n * (a + b + c), axis=1) > 0)


def test_subdiv0_sphere():
    mesh = build_mesh(Sphere(), 0)
    assert len(mesh.vertices) == 12 and len(mesh.faces) == 20
    # regular icosahedron with circumradius 1: edge 4 / sqrt(10 + 2 sqrt 5), area 5 sqrt3 edge^2
    edge = 4 / np.sqrt(10 + 2 * np.sqrt(5))
    assert mesh.area == pytest.approx(5 * np.sqrt(3) * edge ** 2, rel=1e-14)
    assert abs(mesh.area - 4 * np.pi) / (4 * np.pi) == pytest.approx(0.238, abs=1e-3)


def test_sphere_area_converges_quadratically():
    errs = [abs(cached_mesh("sphere:R=1", s).area - 4 * np.pi) / (4 * np.pi) for s in range(1, 6)]
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 1.9)
    # flat triangles inscribed in the sphere lose about 0.12% of the area at subdiv 4
    assert errs[3] < 1.5e-3
    assert errs[4] < 5e-4


def test_norm_wulff_mesh_vs_grid():
    mesh = cached_mesh("wulff-norm", 4)
    grid = cached_grid("wulff-norm", 4)
    assert abs(mesh.area - grid.area) / grid.area < 5e-3


def test_vertex_areas_sum():
    mesh = cached_mesh("ellipsoid:a=1,b=1.5,c=2", 2)
    assert mesh.vertex_areas.sum() == pytest.approx(mesh.area, rel=1e-14)
    assert np.all(mesh.vertex_areas > 0)


def test_frames_are_exact():
    mesh = cached_mesh("sphere:R=1", 2)
    np.testing.assert_allclose(mesh.frames.nu, -mesh.vertices, atol=1e-14)


def test_face_projectors():
    mesh = cached_mesh("wulff-quad", 1)
    Pi = mesh.face_projectors
    np.testing.assert_allclose(Pi @ Pi, Pi, atol=1e-14)
    assert np.max(np.abs(np.einsum("fab,fb->fa", Pi, mesh.face_normals))) < 1e-14


def test_flipped_face_detected():
    mesh = build_mesh(Sphere(), 1)
    faces = mesh.faces.copy()
    faces[0] = faces[0, ::-1]
    broken = SurfaceMesh(mesh.p, mesh.vertices, faces, mesh.frames, mesh.surface)
    with pytest.raises(TopologyError):
        broken.check()


def test_open_mesh_detected():
    mesh = build_mesh(Sphere(), 1)
    broken = SurfaceMesh(mesh.p, mesh.vertices, mesh.faces[1:], mesh.frames, mesh.surface)
    with pytest.raises(TopologyError):
        broken.check()


def test_curves_rejected():
    with pytest.raises(ValueError):
        build_mesh(Sphere(1.0, n=1), 2)


def test_radial_projection_failure():
    with pytest.raises(ProjectionFailure):
        build_mesh(RadialGraph([2.0], ["x3"]), 1)


def test_obj_round_trip(tmp_path):
    mesh = cached_mesh("ellipsoid:a=1,b=1.5,c=2", 1)
    path = tmp_path / "m.obj"
    write_obj(mesh, path)
    v, f = read_obj(path)
    np.testing.assert_allclose(v, mesh.vertices, atol=1e-11)
    np.testing.assert_array_equal(f, mesh.faces)
    text = path.read_text().splitlines()
    assert text[0].startswith("#")
    assert sum(line.startswith("f ") for line in text) == 80


def test_vertex_scalars(tmp_path):
    path = tmp_path / "s.txt"
    write_vertex_scalars(path, np.arange(4.0), name="psi")
    lines = path.read_text().splitlines()
    assert lines[0] == "# psi" and [float(x) for x in lines[1:]] == [0, 1, 2, 3]
