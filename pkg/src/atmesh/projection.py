"""Move mesh vertices so that triangle normals follow a prescribed per-face field.

Positions are stacked vertex-major into a vector ``p`` of length ``3 |V|``
(``p[3*i + k]`` is coordinate ``k`` of vertex ``i``). The energy minimized is

    E = E_m + w1 * E_f + w2 * E_d

with E_m the normal-matching term, E_f the feature-weighted fairness term and
E_d the data attachment to the original positions ``q``.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .errors import FlipLimitError
from .linalg import spd_solve

log = logging.getLogger(__name__)

_LAPLACE3 = np.array([[2.0, -1.0, -1.0], [-1.0, 2.0, -1.0], [-1.0, -1.0, 2.0]])
_STENCIL = np.array([1.0, 1.0, -1.0, -1.0])


@dataclass
class ProjectionParams:
    w1: float = 1.0
    w2: float = 0.05
    w2_vertex_mask: Optional[np.ndarray] = None
    solver_tol: float = 1e-8
    solver: str = "direct"
    max_flips: Optional[int] = None

    def __post_init__(self):
        if self.w1 < 0:
            raise ValueError("w1 must be >= 0")
        if not self.w2 > 0:
            raise ValueError("w2 must be > 0")
        if self.w2_vertex_mask is not None:
            m = np.asarray(self.w2_vertex_mask, float)
            if np.any(m < 0):
                raise ValueError("w2_vertex_mask entries must be >= 0")
            if not np.any(m > 0):
                raise ValueError("w2_vertex_mask needs at least one positive entry")

    def vertex_weights(self, n):
        if self.w2_vertex_mask is None:
            return np.full(n, self.w2)
        m = np.asarray(self.w2_vertex_mask, float)
        if m.shape != (n,):
            raise ValueError(f"w2_vertex_mask must have shape ({n},)")
        return self.w2 * m


def _unit(u):
    u = np.asarray(u, float)
    n = np.linalg.norm(u, axis=1, keepdims=True)
    n[n == 0] = 1.0
    return u / n


def assemble_normal_matching(mesh, u):
    """Hessian ``C`` of E_m, so that ``C @ p`` is its gradient and ``E_m = p.C.p / 2``."""
    u = np.asarray(u, float)
    if u.shape != (mesh.n_faces, 3):
        raise ValueError(f"u must have shape ({mesh.n_faces}, 3)")
    t = mesh.triangles
    rows, cols, vals = [], [], []
    for a in range(3):
        for b in range(3):
            for i in range(3):
                for j in range(3):
                    rows.append(3 * t[:, a] + i)
                    cols.append(3 * t[:, b] + j)
                    vals.append(2.0 * _LAPLACE3[a, b] * u[:, i] * u[:, j])
    n = 3 * mesh.n_vertices
    C = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    C.sum_duplicates()
    return C


def fairness_stencils(mesh):
    """(k, 4) vertex stencils (i1, i2, i3, i4) for each interior edge.

    (i1, i2) is the shared edge, i3 / i4 the opposite vertices of its two faces.
    """
    ie = mesh.interior_edges
    e = mesh.edges[ie]
    ef = mesh.edge_faces[ie]
    tri = mesh.triangles

    def opposite(faces):
        t = tri[faces]
        mask = (t != e[:, :1]) & (t != e[:, 1:2])
        return t[mask]

    return np.stack([e[:, 0], e[:, 1], opposite(ef[:, 0]), opposite(ef[:, 1])], axis=1)


def assemble_fairness(mesh, v):
    """Hessian ``D`` of E_f for a frozen (clamped) feature field ``v``."""
    v = np.clip(np.asarray(v, float), 0.0, 1.0)
    st = fairness_stencils(mesh)
    w = ((v[st[:, 0]] + v[st[:, 1]]) / 2.0) ** 2
    rows, cols, vals = [], [], []
    for a in range(4):
        for b in range(4):
            rows.append(st[:, a])
            cols.append(st[:, b])
            vals.append(2.0 * w * _STENCIL[a] * _STENCIL[b])
    nv = mesh.n_vertices
    if st.size:
        Ds = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(nv, nv))
    else:
        Ds = sp.csr_matrix((nv, nv))
    Ds.sum_duplicates()
    return sp.kron(Ds, sp.identity(3), format="csr")


def projection_energies(mesh, p, q, u, v):
    """Direct summation of (E_m, E_f, E_d) for positions ``p`` (|V|, 3)."""
    p = np.asarray(p, float).reshape(-1, 3)
    q = np.asarray(q, float).reshape(-1, 3)
    u = np.asarray(u, float)
    t = mesh.triangles
    e_m = 0.0
    for a, b in ((0, 1), (1, 2), (2, 0)):
        d = p[t[:, b]] - p[t[:, a]]
        e_m += float(np.sum(np.einsum("ij,ij->i", d, u) ** 2))
    v = np.clip(np.asarray(v, float), 0.0, 1.0)
    st = fairness_stencils(mesh)
    w = ((v[st[:, 0]] + v[st[:, 1]]) / 2.0) ** 2
    s = p[st[:, 0]] + p[st[:, 1]] - p[st[:, 2]] - p[st[:, 3]]
    e_f = float(np.sum(w * np.sum(s * s, axis=1)))
    e_d = float(np.sum((p - q) ** 2))
    return e_m, e_f, e_d


@dataclass
class ProjectionResult:
    mesh: object
    flipped: int
    energies: tuple


def count_flips(mesh, u):
    """Faces whose geometric normal points against the prescribed one."""
    p = mesh.vertices[mesh.triangles]
    n = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    return int(np.sum(np.einsum("ij,ij->i", n, u) < 0))


def project_vertices(mesh, u, v, params=None):
    """Solve ``(C + w1 D + W2) p = W2 q`` for the new vertex positions.

    ``u`` is renormalized per face; ``W2`` is the diagonal of per-vertex data
    weights (``w2`` times the optional mask). Flipped triangles are counted but
    not prevented; with ``params.max_flips`` set, exceeding it raises
    FlipLimitError.
    """
    params = params or ProjectionParams()
    u = _unit(u)
    q = mesh.vertices
    n = mesh.n_vertices
    w2 = np.repeat(params.vertex_weights(n), 3)
    C = assemble_normal_matching(mesh, u)
    lhs = C + sp.diags(w2)
    if params.w1 > 0:
        lhs = lhs + params.w1 * assemble_fairness(mesh, v)
    lhs = lhs.tocsr()
    rhs = w2 * q.reshape(-1)
    p = spd_solve(lhs, rhs, tol=params.solver_tol, method=params.solver, check_symmetry=False)
    out = mesh.with_vertices(p.reshape(-1, 3))
    flipped = count_flips(out, u)
    if flipped:
        log.info("projection produced %d flipped triangles", flipped)
    if params.max_flips is not None and flipped > params.max_flips:
        raise FlipLimitError(flipped, params.max_flips)
    energies = projection_energies(mesh, out.vertices, q, u, v)
    return ProjectionResult(out, flipped, energies)
