"""Boundary loops and hole filling by minimum-area triangulation plus refinement."""

import numpy as np

from .errors import HoleFillingError
from .mesh import TriangleMesh


def boundary_loops(mesh):
    """Boundary loops as vertex lists, oriented opposite to their adjacent faces.

    With this orientation a loop can be triangulated directly with faces
    consistent with the rest of the mesh.
    """
    nxt = {}
    for f, (a, b, c) in enumerate(mesh.triangles.tolist()):
        for s, d in ((a, b), (b, c), (c, a)):
            e = mesh.face_edges[f][[a, b, c].index(s)]
            if mesh.boundary_edges[e]:
                if d in nxt:
                    raise HoleFillingError(f"boundary loop through vertex {d} is not simple")
                nxt[d] = s
    loops, seen = [], set()
    for start in sorted(nxt):
        if start in seen:
            continue
        loop, cur = [], start
        while cur not in seen:
            seen.add(cur)
            loop.append(cur)
            cur = nxt[cur]
        if cur != start:
            raise HoleFillingError(f"boundary loop through vertex {cur} is not simple")
        loops.append(loop)
    return loops


def _tri_area(p, i, m, j):
    return 0.5 * np.linalg.norm(np.cross(p[m] - p[i], p[j] - p[i]), axis=-1)


def min_area_triangulation(points, forbidden=None):
    """Triangulate a closed polygon minimizing total area (O(k^3) dynamic program).

    ``forbidden`` is an optional boolean (k, k) matrix of vertex pairs that may
    not become diagonals (for instance because they are already connected in
    the surrounding mesh). Returns triangles as index triples into ``points``,
    oriented along the polygon order.
    """
    p = np.asarray(points, float)
    k = len(p)
    if k < 3:
        raise HoleFillingError("polygon needs at least 3 vertices")
    # zero-area triangles (collinear boundary runs) are not allowed
    scale = np.ptp(p, axis=0).max() if k else 0.0
    tiny = 1e-10 * scale * scale
    cost = np.zeros((k, k))
    split = np.full((k, k), -1, dtype=np.int64)
    for gap in range(2, k):
        for i in range(k - gap):
            j = i + gap
            m = np.arange(i + 1, j)
            area = _tri_area(p, np.full(len(m), i), m, np.full(len(m), j))
            c = cost[i, m] + cost[m, j] + np.where(area > tiny, area, np.inf)
            best = int(np.argmin(c))
            cost[i, j] = c[best]
            split[i, j] = m[best]
            if forbidden is not None and forbidden[i, j] and not (i == 0 and j == k - 1):
                cost[i, j] = np.inf
    if not np.isfinite(cost[0, k - 1]):
        raise HoleFillingError("no valid triangulation of boundary loop")
    tris, stack = [], [(0, k - 1)]
    while stack:
        i, j = stack.pop()
        if j - i < 2:
            continue
        m = int(split[i, j])
        tris.append((i, m, j))
        stack += [(i, m), (m, j)]
    return tris


def _angle(p, a, b, c):
    """Angle at ``a`` in triangle (a, b, c)."""
    u, w = p[b] - p[a], p[c] - p[a]
    return np.arctan2(np.linalg.norm(np.cross(u, w)), np.dot(u, w))


def _relax(points, tris, patch, max_sweeps=50):
    """Delaunay edge flips restricted to edges shared by two patch faces."""
    for _ in range(max_sweeps):
        edge_faces = {}
        for f, t in enumerate(tris):
            for k in range(3):
                a, b = t[k], t[(k + 1) % 3]
                edge_faces.setdefault((min(a, b), max(a, b)), []).append(f)
        flipped = False
        touched = set()
        for (a, b), fs in edge_faces.items():
            if len(fs) != 2 or not (patch[fs[0]] and patch[fs[1]]):
                continue
            if fs[0] in touched or fs[1] in touched:
                continue
            t0, t1 = tris[fs[0]], tris[fs[1]]
            c = next(x for x in t0 if x not in (a, b))
            d = next(x for x in t1 if x not in (a, b))
            if (min(c, d), max(c, d)) in edge_faces:
                continue
            if _angle(points, c, a, b) + _angle(points, d, a, b) <= np.pi + 1e-12:
                continue
            # keep orientation: t0 contains the directed edge x->y, t1 contains y->x
            k0 = t0.index(c)
            x, y = t0[(k0 + 1) % 3], t0[(k0 + 2) % 3]
            tris[fs[0]] = [c, x, d]
            tris[fs[1]] = [d, y, c]
            touched.update(fs)
            flipped = True
        if not flipped:
            return


def _refine(points, sigma, tris, patch, max_rounds=30):
    """Centroid splits of patch faces that are large relative to the local edge scale."""
    for _ in range(max_rounds):
        new_tris, new_patch, split_any = [], [], False
        for t, is_patch in zip(tris, patch):
            if not is_patch:
                new_tris.append(t)
                new_patch.append(False)
                continue
            c = points[t].mean(axis=0)
            sc = float(np.mean([sigma[i] for i in t]))
            d = np.sqrt(2.0) * np.linalg.norm(points[t] - c, axis=1)
            if all(d[k] > sc and d[k] > sigma[t[k]] for k in range(3)):
                idx = len(points)
                points = np.vstack([points, c])
                sigma.append(sc)
                a, b, cc = t
                new_tris += [[a, b, idx], [b, cc, idx], [cc, a, idx]]
                new_patch += [True, True, True]
                split_any = True
            else:
                new_tris.append(t)
                new_patch.append(True)
        tris, patch = new_tris, new_patch
        if not split_any:
            break
        _relax(points, tris, patch)
    return points, tris, patch


def loop_length(mesh, loop):
    p = mesh.vertices[np.asarray(loop)]
    return float(np.linalg.norm(p - np.roll(p, -1, axis=0), axis=1).sum())


def hole_loops(mesh, keep_outer=False):
    """Boundary loops to fill; with ``keep_outer`` and several loops, the longest
    one is treated as the outer border of an open surface and left out."""
    loops = boundary_loops(mesh)
    if keep_outer and len(loops) > 1:
        outer = int(np.argmax([loop_length(mesh, l) for l in loops]))
        loops = loops[:outer] + loops[outer + 1:]
    return loops


def fill_holes(mesh, refine=True, keep_outer=False):
    """Close every boundary loop (all but the longest one with ``keep_outer``).

    Each loop is triangulated by the minimum-area dynamic program. With
    ``refine`` the patch is densified by centroid insertion and Delaunay flips
    until its triangles match the edge lengths around the hole; inserted
    vertices are appended after the original ones.

    Returns ``(filled_mesh, new_face_mask)``.
    """
    loops = hole_loops(mesh, keep_outer)
    if not loops:
        return mesh, np.zeros(mesh.n_faces, bool)
    points = np.array(mesh.vertices, float)
    tris = mesh.triangles.tolist()
    patch = [False] * len(tris)
    existing = {tuple(e) for e in mesh.edges.tolist()}
    for loop in loops:
        k = len(loop)
        forbidden = np.zeros((k, k), bool)
        for i in range(k):
            for j in range(i + 2, k):
                if (min(loop[i], loop[j]), max(loop[i], loop[j])) in existing:
                    forbidden[i, j] = True
        for i, m, j in min_area_triangulation(points[loop], forbidden):
            tris.append([loop[i], loop[m], loop[j]])
            patch.append(True)
    if refine:
        # local edge scale: mean length of original edges at each vertex
        lengths = np.zeros(mesh.n_vertices)
        counts = np.zeros(mesh.n_vertices)
        for k in range(2):
            np.add.at(lengths, mesh.edges[:, k], mesh.edge_lengths)
            np.add.at(counts, mesh.edges[:, k], 1)
        sigma = list(lengths / np.maximum(counts, 1))
        _relax(points, tris, patch)
        points, tris, patch = _refine(points, sigma, tris, patch)
    uvs = None
    if mesh.uvs is not None and len(points) == mesh.n_vertices:
        uvs = mesh.uvs
    out = TriangleMesh(points, tris, uvs)
    return out, np.array(patch, bool)
