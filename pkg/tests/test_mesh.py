import numpy as np
import pytest

from capscan.geometry import (
    MeshError,
    TriangleMesh,
    generate_sphere_phantom,
    generate_stomach_phantom,
    load_mesh,
    save_coverage_ply,
    stomach_phantom_path,
)
from capscan.geometry.mesh import STOMACH_VERTEX_COUNT, compute_vertex_normals, save_ply

TETRA_OBJ = """\
# unit tetrahedron
v 1.0 1.0 1.0
v 1.0 -1.0 -1.0
v -1.0 1.0 -1.0
v -1.0 -1.0 1.0
f 1 3 2
f 1 2 4
f 1 4 3
f 2 3 4
"""


def test_obj_tetrahedron(tmp_path):
    path = tmp_path / "tetra.obj"
    path.write_text(TETRA_OBJ)
    mesh = load_mesh(path)
    assert mesh.vertex_count == 4
    assert mesh.triangle_count == 4
    assert mesh.is_watertight()
    assert np.allclose(np.linalg.norm(mesh.normals, axis=1), 1.0, atol=1e-9)


def test_obj_quad_face_rejected(tmp_path):
    path = tmp_path / "quad.obj"
    path.write_text("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n")
    with pytest.raises(MeshError, match="non-triangle face"):
        load_mesh(path)


def test_obj_zero_vertices(tmp_path):
    path = tmp_path / "empty.obj"
    path.write_text("# nothing here\n")
    with pytest.raises(MeshError, match="zero vertices"):
        load_mesh(path)


def test_missing_file(tmp_path):
    with pytest.raises(MeshError, match="cannot read"):
        load_mesh(tmp_path / "nope.obj")


def test_unsupported_extension(tmp_path):
    path = tmp_path / "mesh.stl"
    path.write_text("solid\n")
    with pytest.raises(MeshError, match="unsupported mesh format"):
        load_mesh(path)


def test_sphere_base_icosahedron():
    mesh = generate_sphere_phantom(12, 0.05)
    assert mesh.vertex_count == 12
    assert mesh.triangle_count == 20
    assert mesh.is_watertight()


def test_sphere_vertex_budget():
    mesh = generate_sphere_phantom(2000, 0.05)
    assert abs(mesh.vertex_count - 2000) <= 200  # within 10%
    # frequency-f geodesic grid: exactly 10 f^2 + 2
    assert mesh.vertex_count == 10 * 14**2 + 2
    assert mesh.is_watertight()
    assert np.allclose(np.linalg.norm(mesh.vertices, axis=1), 0.05, atol=1e-12)


def test_sphere_too_few_vertices():
    with pytest.raises(MeshError):
        generate_sphere_phantom(11, 0.05)


def test_sphere_normal_orientation():
    inward = generate_sphere_phantom(42, 1.0, inward=True)
    outward = generate_sphere_phantom(42, 1.0, inward=False)
    # radial normals: inward points against the position vector
    assert np.all(np.einsum("ij,ij->i", inward.normals, inward.vertices) < 0)
    assert np.all(np.einsum("ij,ij->i", outward.normals, outward.vertices) > 0)
    assert outward.signed_volume() > 0
    assert inward.signed_volume() < 0


def test_stomach_phantom_counts():
    mesh = generate_stomach_phantom()
    assert mesh.vertex_count == STOMACH_VERTEX_COUNT
    assert mesh.is_watertight()
    assert np.allclose(np.linalg.norm(mesh.normals, axis=1), 1.0, atol=1e-9)
    # cavity mesh: inward winding
    assert mesh.signed_volume() < 0
    span = mesh.bounding_box()[1] - mesh.bounding_box()[0]
    assert 0.05 < span.max() < 0.2  # stomach-scale extents


def test_bundled_phantom_loads():
    mesh = load_mesh(stomach_phantom_path())
    assert mesh.vertex_count == STOMACH_VERTEX_COUNT
    gen = generate_stomach_phantom()
    assert np.allclose(mesh.vertices, gen.vertices)
    assert np.array_equal(mesh.triangles, gen.triangles)


def test_ply_round_trip(tmp_path):
    mesh = generate_sphere_phantom(162, 0.05)
    path = tmp_path / "sphere.ply"
    save_ply(mesh, path)
    back = load_mesh(path)
    assert np.array_equal(back.vertices, mesh.vertices)
    assert np.array_equal(back.triangles, mesh.triangles)
    assert np.allclose(back.normals, mesh.normals)


def test_coverage_ply_colors(tmp_path):
    mesh = generate_sphere_phantom(42, 0.05)
    visited = np.zeros(mesh.vertex_count, dtype=bool)
    visited[:10] = True
    path = tmp_path / "cov.ply"
    save_coverage_ply(mesh, visited, path)
    raw = path.read_bytes()
    header_end = raw.index(b"end_header\n") + len(b"end_header\n")
    rec = np.dtype([("pos", "<f8", 3), ("nrm", "<f8", 3), ("rgb", "<u1", 3)])
    data = np.frombuffer(raw, dtype=rec, count=mesh.vertex_count, offset=header_end)
    blue = np.all(data["rgb"] == (0, 0, 255), axis=1)
    red = np.all(data["rgb"] == (255, 0, 0), axis=1)
    assert blue.sum() == 10
    assert red.sum() == mesh.vertex_count - 10


def test_computed_normals_match_radial():
    mesh = generate_sphere_phantom(642, 1.0, inward=False)
    computed = compute_vertex_normals(mesh.vertices, mesh.triangles)
    radial = mesh.vertices / np.linalg.norm(mesh.vertices, axis=1)[:, None]
    # area-weighted estimates align with true radials on a fine sphere
    dots = np.einsum("ij,ij->i", computed, radial)
    assert dots.min() > 0.99


def test_validate_rejects_bad_index():
    verts = np.zeros((3, 3))
    normals = np.tile([0.0, 0.0, 1.0], (3, 1))
    mesh = TriangleMesh(verts, normals, np.array([[0, 1, 5]]))
    with pytest.raises(MeshError, match="out of range"):
        mesh.validate()
