"""Synthetic meshes used by tests, demos and the acceptance suite."""

import numpy as np
from scipy.spatial import ConvexHull

from .mesh import TriangleMesh, subdivide_midpoint


def single_triangle(side=1.0):
    """Equilateral triangle in the xy-plane, counter-clockwise."""
    v = [[0, 0, 0], [side, 0, 0], [side / 2, side * np.sqrt(3) / 2, 0]]
    return TriangleMesh(v, [[0, 1, 2]])


def unit_square():
    """Unit square split along the (0,0)-(1,1) diagonal."""
    v = [[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]]
    return TriangleMesh(v, [[0, 1, 2], [0, 2, 3]])


def tetrahedron():
    v = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], float)
    return TriangleMesh(v, [[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]])


def cube(levels=0, half=1.0):
    """Axis-aligned cube with corners at +-half, 12 triangles, optionally subdivided."""
    v = half * np.array([
        [-1, -1, -1], [1, -1, -1], [1, 1, -1], [-1, 1, -1],
        [-1, -1, 1], [1, -1, 1], [1, 1, 1], [-1, 1, 1],
    ], float)
    quads = [
        [0, 3, 2, 1],  # z-
        [4, 5, 6, 7],  # z+
        [0, 1, 5, 4],  # y-
        [2, 3, 7, 6],  # y+
        [0, 4, 7, 3],  # x-
        [1, 2, 6, 5],  # x+
    ]
    tris = []
    for a, b, c, d in quads:
        tris += [[a, b, c], [a, c, d]]
    return subdivide_midpoint(TriangleMesh(v, tris), levels)


def grid(nx=8, ny=8, size=(1.0, 1.0), uv=True):
    """Flat regular grid of squares split along their lower-left/upper-right diagonal."""
    xs = np.linspace(0, size[0], nx + 1)
    ys = np.linspace(0, size[1], ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    verts = np.stack([X.ravel(), Y.ravel(), np.zeros(X.size)], axis=1)
    idx = np.arange((nx + 1) * (ny + 1)).reshape(ny + 1, nx + 1)
    a = idx[:-1, :-1].ravel()
    b = idx[:-1, 1:].ravel()
    c = idx[1:, 1:].ravel()
    d = idx[1:, :-1].ravel()
    tris = np.concatenate([np.stack([a, b, c], 1), np.stack([a, c, d], 1)])
    uvs = None
    if uv:
        uvs = np.stack([X.ravel() / size[0], Y.ravel() / size[1]], axis=1)
    return TriangleMesh(verts, tris, uvs)


def icosahedron():
    t = (1 + 5 ** 0.5) / 2
    v = np.array([
        [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
        [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
        [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
    ], float)
    f = [
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ]
    return TriangleMesh(v / np.linalg.norm(v[0]), f)


def icosphere(levels=2):
    """Subdivided icosahedron with vertices pushed to the unit sphere."""
    m = icosahedron()
    for _ in range(levels):
        m = subdivide_midpoint(m, 1)
        v = m.vertices / np.linalg.norm(m.vertices, axis=1, keepdims=True)
        m = TriangleMesh(v, m.triangles)
    return m


def wedge(angle_deg=60.0, n=8, length=1.0):
    """Two planar square patches meeting along the y-axis at the given dihedral angle.

    Patch A lies in the xy-plane (x <= 0); patch B is rotated about the y-axis
    so that the interior angle between the patches is ``angle_deg``.
    """
    g = grid(2 * n, n, size=(2 * length, length), uv=False)
    v = g.vertices.copy()
    v[:, 0] -= length
    right = v[:, 0] > 0
    theta = np.pi - np.radians(angle_deg)
    x = v[right, 0]
    v[right, 0] = x * np.cos(theta)
    v[right, 2] = x * np.sin(theta)
    return TriangleMesh(v, g.triangles)


def random_sphere_mesh(n_vertices=50, seed=0, jitter=0.1):
    """Closed random mesh: convex hull of random sphere points, radially perturbed."""
    rng = np.random.default_rng(seed)
    p = rng.normal(size=(n_vertices, 3))
    p /= np.linalg.norm(p, axis=1, keepdims=True)
    hull = ConvexHull(p)
    tris = hull.simplices.copy()
    # orient outward
    c = p[tris].mean(axis=1)
    n = np.cross(p[tris[:, 1]] - p[tris[:, 0]], p[tris[:, 2]] - p[tris[:, 0]])
    flip = np.einsum("ij,ij->i", n, c) < 0
    tris[flip] = tris[flip][:, [0, 2, 1]]
    p = p * (1 + jitter * rng.uniform(-1, 1, size=(n_vertices, 1)))
    return TriangleMesh(p, tris)
