import numpy as np
import pytest

from atmesh import shapes
from atmesh.mesh import TriangleMesh


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def cube2():
    return shapes.cube(2)


@pytest.fixture(scope="session")
def cube3():
    return shapes.cube(3)


def cube_crease_vertices(mesh, half=1.0, tol=1e-9):
    """Vertices of an axis-aligned cube lying on one of its 12 edges."""
    on_face = np.isclose(np.abs(mesh.vertices), half, atol=tol)
    return on_face.sum(axis=1) >= 2


def cube_crease_edges(mesh, half=1.0):
    """Edges of a subdivided cube lying on its 12 sharp edges."""
    crease = cube_crease_vertices(mesh, half)
    e = mesh.edges
    both = crease[e[:, 0]] & crease[e[:, 1]]
    # both endpoints on creases and sharing two saturated coordinates
    a = np.isclose(np.abs(mesh.vertices[e[:, 0]]), half)
    b = np.isclose(np.abs(mesh.vertices[e[:, 1]]), half)
    same = (a & b & np.isclose(mesh.vertices[e[:, 0]], mesh.vertices[e[:, 1]])).sum(axis=1) >= 2
    return np.flatnonzero(both & same)


def graph_distance(mesh, sources):
    """Breadth-first edge distance from a boolean vertex mask."""
    dist = np.full(mesh.n_vertices, -1)
    frontier = list(np.flatnonzero(sources))
    dist[frontier] = 0
    nbrs = mesh.vertex_neighbors
    while frontier:
        nxt = []
        for a in frontier:
            for b in nbrs[a]:
                if dist[b] < 0:
                    dist[b] = dist[a] + 1
                    nxt.append(b)
        frontier = nxt
    return dist


def remove_vertices(mesh, keep):
    """Submesh of faces whose vertices are all kept, reindexed."""
    tri = mesh.triangles[np.all(keep[mesh.triangles], axis=1)]
    used = np.unique(tri)
    remap = -np.ones(mesh.n_vertices, int)
    remap[used] = np.arange(len(used))
    uvs = mesh.uvs[used] if mesh.uvs is not None else None
    return TriangleMesh(mesh.vertices[used], remap[tri], uvs)


def random_rotation(rng):
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def random_multicut_instance(rng):
    """Connected graph on 2..10 nodes: a path plus random chords, N(0, 1) costs."""
    from atmesh.multicut import FaceGraph

    n = int(rng.integers(2, 11))
    arcs = {(i, i + 1) for i in range(n - 1)}
    for i in range(n):
        for j in range(i + 2, n):
            if rng.random() < 0.5:
                arcs.add((i, j))
    arcs = sorted(arcs)
    return FaceGraph(n, arcs, rng.normal(size=len(arcs)))


@pytest.fixture(scope="session")
def denoised_cube5():
    """Clean cube(5), its noisy copy (sigma 0.3, seed 7) and the default denoising result."""
    from atmesh.mesh import add_normal_noise
    from atmesh.pipelines import denoise

    clean = shapes.cube(5)
    noisy = add_normal_noise(clean, 0.3, seed=7)
    out, v, report = denoise(noisy, reference=clean)
    return clean, noisy, out, v, report


def cube_edge_chains(mesh, half=1.0):
    """Boolean vertex masks of the 12 cube edges (corners included)."""
    p = mesh.vertices
    chains = []
    for axis in range(3):
        a, b = [k for k in range(3) if k != axis]
        for s1 in (-half, half):
            for s2 in (-half, half):
                chains.append(np.isclose(p[:, a], s1) & np.isclose(p[:, b], s2))
    return chains
