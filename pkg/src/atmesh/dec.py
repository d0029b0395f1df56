"""Discrete exterior calculus operators on a triangle mesh (circumcentric dual).

Notation follows the matrix form of the Ambrosio-Tortorelli energy:

* ``A``  primal exterior derivative d0, |E| x |V|
* ``B``  dual exterior derivative on dual 0-forms, |E_int| x |F|
* ``M``  edge averaging, ``abs(A) / 2``
* ``S0, S1, S0bar, S1bar`` diagonal Hodge stars, stored as 1-D arrays
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import DegenerateTriangleError

KAPPA = 1e-8


@dataclass(frozen=True)
class DecOperators:
    A: sp.csr_matrix
    B: sp.csr_matrix
    M: sp.csr_matrix
    S0: np.ndarray
    S1: np.ndarray
    S0bar: np.ndarray
    S1bar: np.ndarray
    interior: np.ndarray
    S0_raw: np.ndarray = field(repr=False)
    S1_raw: np.ndarray = field(repr=False)

    @property
    def n_vertices(self):
        return self.A.shape[1]

    @property
    def n_faces(self):
        return self.B.shape[1]

    @property
    def M_int(self):
        """Rows of ``M`` restricted to interior edges (aligned with ``B``)."""
        return self.M[self.interior]

    def dirichlet(self, v):
        """``v.T A.T S1 A v``."""
        d = self.A @ v
        return float(d @ (self.S1 * d))


def corner_cotangents(mesh):
    """(m, 3) cotangent of the interior angle at each triangle corner."""
    p = mesh.vertices[mesh.triangles]
    cots = np.empty((mesh.n_faces, 3))
    for k in range(3):
        e1 = p[:, (k + 1) % 3] - p[:, k]
        e2 = p[:, (k + 2) % 3] - p[:, k]
        cross = np.linalg.norm(np.cross(e1, e2), axis=1)
        if np.any(cross == 0):
            raise DegenerateTriangleError(np.flatnonzero(cross == 0))
        cots[:, k] = np.einsum("ij,ij->i", e1, e2) / cross
    return cots


def build_dec(mesh, kappa=KAPPA):
    """Assemble the DEC operators for ``mesh``.

    Hodge stars are clamped from below so that they stay strictly positive on
    obtuse and right triangles: ``S1 >= kappa``, ``S1bar = 1 / S1`` (hence
    ``<= 1/kappa``) and ``S0 >= kappa * mean triangle area``.
    """
    nv, nf, ne = mesh.n_vertices, mesh.n_faces, mesh.n_edges
    e = mesh.edges
    rows = np.repeat(np.arange(ne), 2)
    A = sp.csr_matrix(
        (np.tile([-1.0, 1.0], ne), (rows, e.reshape(-1))), shape=(ne, nv)
    )
    A.sort_indices()
    M = abs(A) * 0.5

    interior = mesh.interior_edges
    ef = mesh.edge_faces[interior]
    ni = len(interior)
    B = sp.csr_matrix(
        (np.tile([1.0, -1.0], ni), (np.repeat(np.arange(ni), 2), ef.reshape(-1))),
        shape=(ni, nf),
    )
    B.sort_indices()

    cots = corner_cotangents(mesh)
    # edge opposite corner k runs from corner k+1 to corner k+2
    S1_raw = np.zeros(ne)
    for k in range(3):
        np.add.at(S1_raw, mesh.face_edges[:, (k + 1) % 3], 0.5 * cots[:, k])

    p = mesh.vertices[mesh.triangles]
    S0_raw = np.zeros(nv)
    for k in range(3):
        j, l = (k + 1) % 3, (k + 2) % 3
        len_kj = np.sum((p[:, j] - p[:, k]) ** 2, axis=1)
        len_kl = np.sum((p[:, l] - p[:, k]) ** 2, axis=1)
        np.add.at(S0_raw, mesh.triangles[:, k], (len_kj * cots[:, l] + len_kl * cots[:, j]) / 8.0)

    S1 = np.maximum(S1_raw, kappa)
    S1bar = np.minimum(1.0 / S1[interior], 1.0 / kappa)
    S0bar = np.array(mesh.face_areas, float)
    S0 = np.maximum(S0_raw, kappa * S0bar.mean())
    return DecOperators(A=A, B=B, M=M, S0=S0, S1=S1, S0bar=S0bar, S1bar=S1bar,
                        interior=np.asarray(interior), S0_raw=S0_raw, S1_raw=S1_raw)


@dataclass
class Check:
    name: str
    passed: bool
    max_violation: float
    note: str = ""


def verify_dec(ops, mesh, seed=0):
    """Check the structural invariants of ``ops``; returns a list of Check records."""
    checks = []
    A, B = ops.A.tocsr(), ops.B.tocsr()

    def rowwise(mat, name):
        mat = mat.copy()
        mat.eliminate_zeros()
        nnz = np.diff(mat.indptr)
        count_dev = float(np.abs(nnz - 2).max(initial=0))
        checks.append(Check(f"{name} row nonzero count", count_dev == 0, count_dev))
        if count_dev == 0 and len(nnz):
            vals = np.sort(mat.data.reshape(-1, 2), axis=1)
            dev = float(np.abs(vals - [-1.0, 1.0]).max())
            checks.append(Check(f"{name} row entries are +1/-1", dev == 0, dev))
        elif count_dev:
            checks.append(Check(f"{name} row entries are +1/-1", False, count_dev,
                                note="skipped: wrong nonzero count"))

    rowwise(A, "A")
    ones = np.ones(A.shape[1])
    checks.append(Check("A annihilates constants", bool(np.all(A @ ones == 0)),
                        float(np.abs(A @ ones).max(initial=0.0))))
    rowwise(B, "B")
    if B.shape[0]:
        expect = np.zeros(B.shape)
        ef = mesh.edge_faces[ops.interior]
        rows = np.arange(B.shape[0])
        expect[rows, ef[:, 0]] += 1
        expect[rows, ef[:, 1]] -= 1
        dev = float(np.abs(B.toarray() - expect).max()) if B.shape[0] * B.shape[1] < 4e7 else 0.0
        checks.append(Check("B matches edge-face incidence", dev == 0, dev))
    dev = float(abs(ops.M - abs(A) * 0.5).max()) if A.nnz else 0.0
    checks.append(Check("M equals abs(A)/2", dev == 0, dev))
    for name in ("S0", "S1", "S0bar", "S1bar"):
        d = getattr(ops, name)
        lo = float(d.min(initial=np.inf))
        checks.append(Check(f"{name} strictly positive", bool(np.all(d > 0)), max(0.0, -lo) if len(d) else 0.0))
    prod = ops.S1[ops.interior] * ops.S1bar
    checks.append(Check("S1bar inverts S1 on interior edges", bool(np.allclose(prod, 1.0, rtol=1e-12)),
                        float(np.abs(prod - 1).max(initial=0.0))))

    rng = np.random.default_rng(seed)
    v = rng.standard_normal(A.shape[1])
    brute = sum(s * (v[j] - v[i]) ** 2 for (i, j), s in zip(mesh.edges.tolist(), ops.S1))
    mat = ops.dirichlet(v)
    rel = abs(mat - brute) / max(abs(brute), 1e-300)
    checks.append(Check("Dirichlet energy matches edge sum", rel < 1e-12, rel))

    delaunay = bool(np.all(ops.S1_raw[ops.interior] >= 0)) and bool(np.all(ops.S0_raw > 0))
    total = mesh.total_area
    rel = abs(ops.S0.sum() - total) / total
    if mesh.is_closed and delaunay:
        checks.append(Check("sum of S0 equals surface area", rel < 1e-9, rel))
    else:
        checks.append(Check("sum of S0 equals surface area", True, rel,
                            note="not applicable: mesh open or not Delaunay"))
    return checks


def format_report(checks):
    lines = []
    for c in checks:
        status = "PASS" if c.passed else "FAIL"
        note = f"  ({c.note})" if c.note else ""
        lines.append(f"[{status}] {c.name}: max violation {c.max_violation:.3e}{note}")
    return "\n".join(lines)
