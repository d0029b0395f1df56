import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from atmesh import shapes
from atmesh.errors import DegenerateTriangleError, MeshError, NonManifoldError
from atmesh.mesh import (
    TriangleMesh,
    add_normal_noise,
    denormalize,
    face_normals,
    normalize_to_unit_ball,
    subdivide_midpoint,
)
from atmesh.metrics import hausdorff_rms


def test_single_triangle_counts():
    m = shapes.single_triangle()
    assert (m.n_vertices, m.n_faces, m.n_edges) == (3, 1, 3)
    assert m.boundary_edges.all()
    assert not m.is_closed


def test_cube_topology():
    m = shapes.cube()
    assert (m.n_vertices, m.n_faces, m.n_edges) == (8, 12, 18)
    assert m.is_closed
    assert len(m.interior_edges) == 18
    assert m.euler_characteristic() == 2


def test_edges_canonical_and_unique(cube2):
    e = cube2.edges
    assert np.all(e[:, 0] < e[:, 1])
    assert len(np.unique(e, axis=0)) == len(e)


def test_edge_faces_consistent_with_triangles(cube2):
    # brute-force oracle: collect faces per edge from the triangle list
    expected = {}
    for f, t in enumerate(cube2.triangles.tolist()):
        for k in range(3):
            a, b = t[k], t[(k + 1) % 3]
            expected.setdefault((min(a, b), max(a, b)), []).append((f, a < b))
    for (i, j), ef in zip(cube2.edges.tolist(), cube2.edge_faces.tolist()):
        faces = expected[(i, j)]
        assert sorted(ef) == sorted(f for f, _ in faces)
        forward = [f for f, fwd in faces if fwd]
        assert ef[0] == forward[0]


def test_face_edges_follow_corners(cube2):
    t = cube2.triangles
    for k in range(3):
        e = cube2.edges[cube2.face_edges[:, k]]
        a, b = t[:, k], t[:, (k + 1) % 3]
        assert np.array_equal(e[:, 0], np.minimum(a, b))
        assert np.array_equal(e[:, 1], np.maximum(a, b))


def test_index_out_of_range():
    with pytest.raises(MeshError):
        TriangleMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 3]])


def test_nonmanifold_edge_rejected_with_edge_list():
    v = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1]]
    with pytest.raises(NonManifoldError) as exc:
        TriangleMesh(v, [[0, 1, 2], [1, 0, 3], [0, 1, 4]])
    assert exc.value.edges == [(0, 1)]


def test_degenerate_triangle_rejected():
    with pytest.raises(DegenerateTriangleError) as exc:
        TriangleMesh([[0, 0, 0], [1, 0, 0], [2, 0, 0], [0, 1, 0]], [[0, 1, 2], [0, 1, 3]])
    assert exc.value.faces == [0]


def test_arrays_are_read_only(cube2):
    with pytest.raises(ValueError):
        cube2.vertices[0, 0] = 5.0


def test_face_normals_winding():
    m = shapes.single_triangle()
    assert np.allclose(face_normals(m), [[0, 0, 1]])
    r = TriangleMesh(m.vertices, m.triangles[:, [0, 2, 1]])
    assert np.allclose(face_normals(r), [[0, 0, -1]])


def test_cube_face_normals_axis_aligned():
    n = face_normals(shapes.cube())
    uniq = np.unique(np.round(n, 12), axis=0)
    assert len(uniq) == 6
    assert np.allclose(np.abs(uniq).sum(axis=1), 1.0)
    # outward: normal agrees with the face centroid direction
    c = shapes.cube().vertices[shapes.cube().triangles].mean(axis=1)
    assert np.all(np.einsum("ij,ij->i", n, c) > 0)


def test_normalize_cube():
    m, scale, center = normalize_to_unit_ball(shapes.cube())
    assert scale == pytest.approx(1 / np.sqrt(3))
    assert np.allclose(center, 0)
    assert np.linalg.norm(m.vertices, axis=1).max() == pytest.approx(1.0, abs=1e-12)


def test_normalize_idempotent():
    m, _, _ = normalize_to_unit_ball(shapes.icosphere(1))
    m2, scale, center = normalize_to_unit_ball(m)
    assert scale == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(center, 0, atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_normalize_round_trip(seed):
    rng = np.random.default_rng(seed)
    m = shapes.random_sphere_mesh(30, seed=seed)
    m = m.with_vertices(m.vertices * rng.uniform(0.1, 10) + rng.normal(size=3) * 5)
    n, scale, center = normalize_to_unit_ball(m)
    lo, hi = n.bbox
    assert np.allclose((lo + hi) / 2, 0, atol=1e-12)
    assert np.linalg.norm(n.vertices, axis=1).max() == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(denormalize(n, scale, center).vertices, m.vertices, atol=1e-9)


def test_normalize_coincident_vertices():
    m = TriangleMesh(np.zeros((3, 3)), [[0, 1, 2]], validate=False)
    with pytest.raises(MeshError):
        normalize_to_unit_ball(m)


def test_noise_zero_sigma_identity(cube2):
    assert np.array_equal(add_normal_noise(cube2, 0.0, seed=3).vertices, cube2.vertices)


def test_noise_deterministic(cube2):
    a = add_normal_noise(cube2, 0.3, seed=11)
    b = add_normal_noise(cube2, 0.3, seed=11)
    assert np.array_equal(a.vertices, b.vertices)
    assert not np.array_equal(a.vertices, add_normal_noise(cube2, 0.3, seed=12).vertices)


def test_noise_statistics():
    m = shapes.icosphere(5)  # 10242 vertices
    assert m.n_vertices >= 10_000
    out = add_normal_noise(m, 0.3, seed=5)
    d = np.einsum("ij,ij->i", out.vertices - m.vertices, m.vertex_normals)
    assert np.std(d) == pytest.approx(0.3 * m.mean_edge_length, rel=0.05)
    # displacement is purely normal
    assert np.allclose(out.vertices - m.vertices, d[:, None] * m.vertex_normals)


def test_negative_sigma_rejected(cube2):
    with pytest.raises(ValueError):
        add_normal_noise(cube2, -0.1)


def test_subdivide_counts():
    m = subdivide_midpoint(shapes.single_triangle(), 1)
    assert (m.n_faces, m.n_vertices) == (4, 6)
    for levels in range(3):
        assert subdivide_midpoint(shapes.tetrahedron(), levels).n_faces == 4 ** levels * 4


def test_subdivide_preserves_euler_and_orientation():
    m = subdivide_midpoint(shapes.icosahedron(), 2)
    assert m.euler_characteristic() == 2
    c = m.vertices[m.triangles].mean(axis=1)
    assert np.all(np.einsum("ij,ij->i", face_normals(m), c) > 0)


def test_subdivided_cube_is_on_cube_surface():
    m = subdivide_midpoint(shapes.cube(), 2)
    assert np.allclose(np.abs(m.vertices).max(axis=1), 1.0)
    assert hausdorff_rms(shapes.cube(), m) < 1e-12


def test_subdivide_interpolates_uvs():
    g = shapes.grid(2, 2)
    s = subdivide_midpoint(g, 1)
    # uvs of the grid are the xy coordinates
    assert np.allclose(s.uvs, s.vertices[:, :2])


def test_vertex_normals_sphere():
    m = shapes.icosphere(3)
    assert np.all(np.einsum("ij,ij->i", m.vertex_normals, m.vertices) > 0.99)
