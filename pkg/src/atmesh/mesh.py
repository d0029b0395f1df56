"""Indexed triangle mesh with edge adjacency, plus basic geometric operations."""

from functools import cached_property

import numpy as np

from .errors import DegenerateTriangleError, MeshError, NonManifoldError

# relative to the squared bounding-box diagonal
DEGENERATE_AREA_TOL = 1e-12


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


class TriangleMesh:
    """Immutable manifold triangle mesh (possibly with boundary).

    Parameters
    ----------
    vertices : (n, 3) array_like
    triangles : (m, 3) array_like of int
        Counter-clockwise vertex triples.
    uvs : (n, 2) array_like, optional
        Per-vertex texture coordinates.
    validate : bool
        Check index range, manifoldness and triangle degeneracy.
    """

    def __init__(self, vertices, triangles, uvs=None, validate=True):
        self.vertices = _frozen(vertices, float).reshape(-1, 3)
        self.triangles = _frozen(triangles, np.int64).reshape(-1, 3)
        self.uvs = None if uvs is None else _frozen(uvs, float).reshape(-1, 2)
        if self.uvs is not None and len(self.uvs) != len(self.vertices):
            raise MeshError("uvs must have one entry per vertex")
        if validate:
            self._validate()

    def _validate(self):
        n = len(self.vertices)
        t = self.triangles
        if t.size and (t.min() < 0 or t.max() >= n):
            raise MeshError("triangle vertex index out of range")
        if np.any(t[:, 0] == t[:, 1]) or np.any(t[:, 1] == t[:, 2]) or np.any(t[:, 0] == t[:, 2]):
            bad = np.flatnonzero((t[:, 0] == t[:, 1]) | (t[:, 1] == t[:, 2]) | (t[:, 0] == t[:, 2]))
            raise DegenerateTriangleError(bad)
        if not np.all(np.isfinite(self.vertices)):
            raise MeshError("non-finite vertex coordinates")
        counts = np.bincount(self._edge_inverse, minlength=len(self.edges))
        if np.any(counts > 2):
            raise NonManifoldError(self.edges[counts > 2])
        if len(t):
            tol = DEGENERATE_AREA_TOL * self.bbox_diagonal ** 2
            bad = np.flatnonzero(self.face_areas <= tol)
            if len(bad):
                raise DegenerateTriangleError(bad)

    def __repr__(self):
        return f"TriangleMesh(n_vertices={self.n_vertices}, n_faces={self.n_faces}, n_edges={self.n_edges})"

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_faces(self):
        return len(self.triangles)

    @property
    def n_edges(self):
        return len(self.edges)

    def with_vertices(self, vertices):
        """Same connectivity and uvs, new positions (no re-validation)."""
        return TriangleMesh(vertices, self.triangles, self.uvs, validate=False)

    # -- connectivity -------------------------------------------------------

    @cached_property
    def _halfedges(self):
        t = self.triangles
        src = t.reshape(-1)
        dst = t[:, [1, 2, 0]].reshape(-1)
        return src, dst

    @cached_property
    def _edge_data(self):
        src, dst = self._halfedges
        keys = np.stack([np.minimum(src, dst), np.maximum(src, dst)], axis=1)
        if len(keys) == 0:
            return np.zeros((0, 2), np.int64), np.zeros(0, np.int64)
        edges, inverse = np.unique(keys, axis=0, return_inverse=True)
        return edges, inverse.reshape(-1)

    @cached_property
    def edges(self):
        """(E, 2) canonical edges, each stored once with increasing vertex indices."""
        return _frozen(self._edge_data[0], np.int64)

    @cached_property
    def _edge_inverse(self):
        return self._edge_data[1]

    @cached_property
    def face_edges(self):
        """(m, 3) edge index of the half-edge from corner k to corner k+1."""
        return _frozen(self._edge_inverse.reshape(-1, 3), np.int64)

    @cached_property
    def edge_faces(self):
        """(E, 2) incident faces per edge, -1 when absent.

        Column 0 holds the face traversing the edge from low to high vertex index
        (the face on its left), column 1 the opposite one. For inconsistently
        oriented pairs the lower face index goes first.
        """
        ef = np.full((self.n_edges, 2), -1, dtype=np.int64)
        src, dst = self._halfedges
        face_of = np.repeat(np.arange(self.n_faces), 3)
        forward = src < dst
        e = self._edge_inverse
        # within each edge group, forward half-edges sort first
        order = np.lexsort((face_of, ~forward, e))
        e_sorted = e[order]
        first = np.ones(len(order), bool)
        first[1:] = e_sorted[1:] != e_sorted[:-1]
        ef[e_sorted[first], 0] = face_of[order[first]]
        second = ~first
        ef[e_sorted[second], 1] = face_of[order[second]]
        return _frozen(ef, np.int64)

    @cached_property
    def boundary_edges(self):
        """Boolean mask over edges: True where exactly one face is incident."""
        return _frozen(self.edge_faces[:, 1] < 0, bool)

    @cached_property
    def interior_edges(self):
        """Indices of edges with two incident faces."""
        return _frozen(np.flatnonzero(~self.boundary_edges), np.int64)

    @cached_property
    def boundary_vertices(self):
        mask = np.zeros(self.n_vertices, bool)
        mask[self.edges[self.boundary_edges].reshape(-1)] = True
        return _frozen(mask, bool)

    @property
    def is_closed(self):
        return not self.boundary_edges.any()

    def euler_characteristic(self):
        used = np.unique(self.triangles)
        return len(used) - self.n_edges + self.n_faces

    @cached_property
    def vertex_faces(self):
        """List of incident face indices per vertex."""
        out = [[] for _ in range(self.n_vertices)]
        for f, tri in enumerate(self.triangles.tolist()):
            for i in tri:
                out[i].append(f)
        return out

    @cached_property
    def vertex_neighbors(self):
        out = [[] for _ in range(self.n_vertices)]
        for i, j in self.edges.tolist():
            out[i].append(j)
            out[j].append(i)
        return out

    def opposite_vertex(self, face, edge):
        tri = self.triangles[face]
        i, j = self.edges[edge]
        return int(tri[(tri != i) & (tri != j)][0])

    # -- geometry -----------------------------------------------------------

    @cached_property
    def bbox(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    @cached_property
    def bbox_diagonal(self):
        lo, hi = self.bbox
        return float(np.linalg.norm(hi - lo))

    @cached_property
    def _face_cross(self):
        p = self.vertices[self.triangles]
        return np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])

    @cached_property
    def face_areas(self):
        return _frozen(0.5 * np.linalg.norm(self._face_cross, axis=1), float)

    @property
    def total_area(self):
        return float(self.face_areas.sum())

    @cached_property
    def edge_lengths(self):
        d = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        return _frozen(np.linalg.norm(d, axis=1), float)

    @property
    def mean_edge_length(self):
        return float(self.edge_lengths.mean())

    @cached_property
    def vertex_normals(self):
        """Area-weighted vertex normals (unit length)."""
        n = np.zeros_like(self.vertices)
        for k in range(3):
            np.add.at(n, self.triangles[:, k], self._face_cross)
        norm = np.linalg.norm(n, axis=1, keepdims=True)
        norm[norm == 0] = 1.0
        return _frozen(n / norm, float)


def face_normals(mesh):
    """Per-face unit normals from the counter-clockwise cross product.

    Raises DegenerateTriangleError naming zero-area faces.
    """
    c = mesh._face_cross
    norm = np.linalg.norm(c, axis=1)
    tol = DEGENERATE_AREA_TOL * max(mesh.bbox_diagonal, 1e-300) ** 2
    bad = np.flatnonzero(norm <= 2 * tol)
    if len(bad):
        raise DegenerateTriangleError(bad)
    return c / norm[:, None]


def normalize_to_unit_ball(mesh):
    """Center the bounding box at the origin and scale the farthest vertex to norm 1.

    Returns ``(normalized_mesh, scale, center)``; the original positions are
    ``normalized.vertices / scale + center``.
    """
    if mesh.n_vertices < 3:
        raise MeshError("need at least 3 vertices to normalize")
    lo, hi = mesh.bbox
    center = 0.5 * (lo + hi)
    radius = np.linalg.norm(mesh.vertices - center, axis=1).max()
    if not radius > 0:
        raise MeshError("all vertices coincide")
    scale = 1.0 / radius
    return mesh.with_vertices((mesh.vertices - center) * scale), scale, center


def denormalize(mesh, scale, center):
    return mesh.with_vertices(mesh.vertices / scale + center)


def add_normal_noise(mesh, sigma, seed=0):
    """Displace vertices along their area-weighted normals.

    Each displacement is drawn from N(0, (sigma * mean_edge_length)^2).
    """
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if sigma == 0:
        return mesh.with_vertices(mesh.vertices.copy())
    rng = np.random.default_rng(seed)
    amount = rng.normal(0.0, sigma * mesh.mean_edge_length, size=mesh.n_vertices)
    return mesh.with_vertices(mesh.vertices + amount[:, None] * mesh.vertex_normals)


def subdivide_midpoint(mesh, levels=1):
    """Split every triangle 1-to-4 at edge midpoints, ``levels`` times.

    Positions are not smoothed; uvs are interpolated linearly.
    """
    if levels < 0:
        raise ValueError("levels must be >= 0")
    for _ in range(levels):
        n = mesh.n_vertices
        e = mesh.edges
        mid = 0.5 * (mesh.vertices[e[:, 0]] + mesh.vertices[e[:, 1]])
        verts = np.vstack([mesh.vertices, mid])
        uvs = None
        if mesh.uvs is not None:
            uvs = np.vstack([mesh.uvs, 0.5 * (mesh.uvs[e[:, 0]] + mesh.uvs[e[:, 1]])])
        t = mesh.triangles
        m01, m12, m20 = (n + mesh.face_edges[:, k] for k in range(3))
        tris = np.concatenate([
            np.stack([t[:, 0], m01, m20], axis=1),
            np.stack([m01, t[:, 1], m12], axis=1),
            np.stack([m20, m12, t[:, 2]], axis=1),
            np.stack([m01, m12, m20], axis=1),
        ])
        mesh = TriangleMesh(verts, tris, uvs, validate=False)
    return mesh
