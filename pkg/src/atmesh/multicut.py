"""Edge split probabilities and minimum multicut on the triangle adjacency graph.

Arc costs follow the log-odds convention ``c = log(p / (1 - p))``: negative
costs are attractive (the two faces prefer the same segment), positive costs
repulsive. A partition's objective is ``-sum(c)`` over cut arcs, to be
minimized.
"""

import heapq
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

P_MIN = 1e-3
P_MAX = 0.999


def edge_split_probabilities(v, u, mesh, angle_deg=5.0, p_min=P_MIN, p_max=P_MAX):
    """Probability that each interior edge separates two segments.

    The base value is the mean of ``1 - v`` at the edge's endpoints. Edges whose
    two faces carry target normals within ``angle_deg`` of each other are forced
    to ``p_min``. The result is clamped to ``[p_min, p_max]`` and aligned with
    ``mesh.interior_edges``.
    """
    v = np.clip(np.asarray(v, float), 0.0, 1.0)
    u = np.asarray(u, float)
    if v.shape != (mesh.n_vertices,):
        raise ValueError(f"v must have shape ({mesh.n_vertices},)")
    if u.shape != (mesh.n_faces, 3):
        raise ValueError(f"u must have shape ({mesh.n_faces}, 3)")
    ie = mesh.interior_edges
    e = mesh.edges[ie]
    p = ((1.0 - v[e[:, 0]]) + (1.0 - v[e[:, 1]])) / 2.0
    n = u / np.maximum(np.linalg.norm(u, axis=1, keepdims=True), 1e-300)
    ef = mesh.edge_faces[ie]
    cos = np.einsum("ij,ij->i", n[ef[:, 0]], n[ef[:, 1]])
    p = np.where(cos > np.cos(np.radians(angle_deg)), p_min, p)
    return np.clip(p, p_min, p_max)


def log_odds(p):
    p = np.asarray(p, float)
    return np.log(p / (1.0 - p))


@dataclass
class FaceGraph:
    """Undirected weighted graph; ``arcs`` is (k, 2), ``costs`` is (k,)."""

    n_nodes: int
    arcs: np.ndarray
    costs: np.ndarray
    edge_ids: Optional[np.ndarray] = None

    def __post_init__(self):
        self.arcs = np.asarray(self.arcs, np.int64).reshape(-1, 2)
        self.costs = np.asarray(self.costs, float)
        if self.costs.shape != (len(self.arcs),):
            raise ValueError("costs must have one entry per arc")
        if not np.all(np.isfinite(self.costs)):
            raise ValueError("arc costs must be finite")
        if len(self.arcs) and (self.arcs.min() < 0 or self.arcs.max() >= self.n_nodes):
            raise ValueError("arc endpoint out of range")

    @classmethod
    def from_mesh(cls, mesh, probabilities):
        """Faces as nodes, interior edges as arcs with log-odds costs."""
        ie = mesh.interior_edges
        p = np.asarray(probabilities, float)
        if p.shape != (len(ie),):
            raise ValueError(f"need one probability per interior edge ({len(ie)})")
        return cls(mesh.n_faces, mesh.edge_faces[ie], log_odds(p), edge_ids=np.asarray(ie))

    def objective(self, labels):
        labels = np.asarray(labels)
        cut = labels[self.arcs[:, 0]] != labels[self.arcs[:, 1]]
        return float(-np.sum(self.costs[cut]))


@dataclass
class Segmentation:
    labels: np.ndarray
    n_segments: int
    cut_arcs: np.ndarray
    cut_edges: np.ndarray
    objective: float

    def write_labels(self, path):
        with open(path, "w") as fh:
            fh.write("".join(f"{int(l)}\n" for l in self.labels))

    def write_cut_edges(self, path):
        with open(path, "w") as fh:
            fh.write("".join(f"{int(e)}\n" for e in self.cut_edges))


def _gaec(graph):
    """Greedy additive edge contraction; returns a label per node."""
    n = graph.n_nodes
    adj = [dict() for _ in range(n)]  # cluster -> {cluster: [cost, min arc id]}
    for k, ((a, b), c) in enumerate(zip(graph.arcs.tolist(), graph.costs.tolist())):
        if a == b:
            continue
        entry = adj[a].get(b)
        if entry is None:
            adj[a][b] = adj[b][a] = [c, k]
        else:
            entry[0] += c
            entry[1] = min(entry[1], k)
    parent = list(range(n))
    heap = [(e[0], e[1], a, b) for a in range(n) for b, e in adj[a].items() if a < b and e[0] < 0]
    heapq.heapify(heap)
    alive = [True] * n
    while heap:
        c, k, a, b = heapq.heappop(heap)
        if not (alive[a] and alive[b]):
            continue
        entry = adj[a].get(b)
        if entry is None or entry[0] != c or entry[1] != k:
            continue
        # merge the smaller adjacency into the larger
        if len(adj[a]) < len(adj[b]):
            a, b = b, a
        alive[b] = False
        parent[b] = a
        del adj[a][b]
        del adj[b][a]
        for m, eb in adj[b].items():
            del adj[m][b]
            ea = adj[a].get(m)
            if ea is None:
                ea = adj[a][m] = adj[m][a] = [eb[0], eb[1]]
            else:
                ea[0] += eb[0]
                ea[1] = min(ea[1], eb[1])
            if ea[0] < 0:
                heapq.heappush(heap, (ea[0], ea[1], min(a, m), max(a, m)))
        adj[b] = {}
    labels = np.empty(n, np.int64)
    for i in range(n):
        r = i
        while parent[r] != r:
            r = parent[r]
        labels[i] = r
    return labels


class _Adjacency:
    def __init__(self, graph):
        n = graph.n_nodes
        a, b = graph.arcs[:, 0], graph.arcs[:, 1]
        keep = a != b
        a, b, c = a[keep], b[keep], graph.costs[keep]
        mat = sp.csr_matrix((np.concatenate([c, c]), (np.concatenate([a, b]), np.concatenate([b, a]))),
                            shape=(n, n))
        mat.sum_duplicates()
        self.indptr, self.indices, self.data = mat.indptr, mat.indices, mat.data

    def neighbors(self, i):
        s, e = self.indptr[i], self.indptr[i + 1]
        return self.indices[s:e], self.data[s:e]


def _kl_pass(adj, labels, nodes, la, lb, tol):
    """One Kernighan-Lin sequence moving nodes between clusters ``la`` and ``lb``.

    Returns the objective change applied (<= 0).
    """
    pos = {int(n): i for i, n in enumerate(nodes)}
    side = labels[nodes] == lb
    delta = np.zeros(len(nodes))
    for i, n in enumerate(nodes):
        nb, c = adj.neighbors(n)
        for m, cm in zip(nb.tolist(), c.tolist()):
            j = pos.get(m)
            if j is None:
                continue
            delta[i] += cm if side[j] != side[i] else -cm
    moved = np.zeros(len(nodes), bool)
    order, total, best, best_len = [], 0.0, 0.0, 0
    d = delta.copy()
    for _ in range(len(nodes)):
        d_masked = np.where(moved, np.inf, d)
        i = int(np.argmin(d_masked))
        if not np.isfinite(d_masked[i]):
            break
        total += d[i]
        moved[i] = True
        side[i] = ~side[i]
        order.append(i)
        nb, c = adj.neighbors(nodes[i])
        for m, cm in zip(nb.tolist(), c.tolist()):
            j = pos.get(m)
            if j is None or moved[j]:
                continue
            d[j] += -2 * cm if side[j] == side[i] else 2 * cm
        if total < best - tol:
            best, best_len = total, len(order)
    if best_len == 0:
        return 0.0
    for i in order[:best_len]:
        n = nodes[i]
        labels[n] = la if labels[n] == lb else lb
    return best


def _node_moves(adj, labels, tol):
    """Greedy single-node moves to a neighboring cluster or a new singleton.

    Applies moves in node order while any strictly improves; returns whether
    anything changed.
    """
    changed, any_change = True, False
    next_label = int(labels.max()) + 1
    while changed:
        changed = False
        for n in range(len(labels)):
            nb, c = adj.neighbors(n)
            if not len(nb):
                continue
            own = labels[n]
            sums = {}
            for m, cm in zip(nb.tolist(), c.tolist()):
                if m != n:
                    sums[labels[m]] = sums.get(labels[m], 0.0) + cm
            stay = sums.get(own, 0.0)
            best, target = -stay, next_label  # moving out to a singleton
            for lab in sorted(sums):
                if lab != own and sums[lab] - stay < best:
                    best, target = sums[lab] - stay, lab
            if best < -tol:
                labels[n] = target
                if target == next_label:
                    next_label += 1
                changed = any_change = True
    return any_change


def _refine(graph, labels, tol=1e-12, max_sweeps=100):
    """Kernighan-Lin style local search over pairs of adjacent clusters.

    Each sweep tries, for every adjacent cluster pair, a join and a two-way
    KL move sequence, and for every cluster a KL sequence against a fresh empty
    cluster. Only strictly improving changes are accepted.
    """
    adj = _Adjacency(graph)
    arcs, costs = graph.arcs, graph.costs
    for _ in range(max_sweeps):
        improved = False
        _, labels = np.unique(labels, return_inverse=True)
        labels = labels.astype(np.int64)
        la_, lb_ = labels[arcs[:, 0]], labels[arcs[:, 1]]
        between = la_ != lb_
        pairs = np.unique(np.sort(np.stack([la_[between], lb_[between]], axis=1), axis=1), axis=0)
        next_label = int(labels.max()) + 1 if len(labels) else 0
        for la, lb in pairs.tolist():
            in_a, in_b = labels == la, labels == lb
            if not (in_a.any() and in_b.any()):
                continue
            sel = (in_a[arcs[:, 0]] & in_b[arcs[:, 1]]) | (in_b[arcs[:, 0]] & in_a[arcs[:, 1]])
            join_gain = float(np.sum(costs[sel]))
            trial = labels.copy()
            nodes = np.flatnonzero(in_a | in_b)
            kl_gain = _kl_pass(adj, trial, nodes, la, lb, tol)
            if join_gain < -tol and join_gain <= kl_gain:
                labels[in_b] = la
                improved = True
            elif kl_gain < -tol:
                labels = trial
                improved = True
        if _node_moves(adj, labels, tol):
            improved = True
            next_label = int(labels.max()) + 1
        for la in np.unique(labels).tolist():
            nodes = np.flatnonzero(labels == la)
            if len(nodes) < 2:
                continue
            trial = labels.copy()
            if _kl_pass(adj, trial, nodes, la, next_label, tol) < -tol:
                labels = trial
                next_label += 1
                improved = True
        if not improved:
            break
    return labels


def _lookahead(graph, labels, tol=1e-12, max_rounds=20, max_pairs=64):
    """Join each adjacent cluster pair, re-run the local search, keep improvements.

    Each trial costs a full local search, so the step is skipped once there are
    more than ``max_pairs`` adjacent cluster pairs.
    """
    best = graph.objective(labels)
    for _ in range(max_rounds):
        la_, lb_ = labels[graph.arcs[:, 0]], labels[graph.arcs[:, 1]]
        between = la_ != lb_
        pairs = np.unique(np.sort(np.stack([la_[between], lb_[between]], axis=1), axis=1), axis=0)
        if len(pairs) > max_pairs:
            break
        improved = False
        for la, lb in pairs.tolist():
            trial = labels.copy()
            trial[trial == lb] = la
            trial = _refine(graph, trial, tol)
            obj = graph.objective(trial)
            if obj < best - tol:
                labels, best, improved = trial, obj, True
                break
        if not improved:
            break
    return labels


def _split_components(graph, labels):
    """Relabel so every segment is connected; ids ordered by lowest node index."""
    a, b = graph.arcs[:, 0], graph.arcs[:, 1]
    same = labels[a] == labels[b]
    n = graph.n_nodes
    mat = sp.csr_matrix((np.ones(int(same.sum())), (a[same], b[same])), shape=(n, n))
    _, comp = connected_components(mat, directed=False)
    _, first = np.unique(comp, return_index=True)
    rank = np.empty(len(first), np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(len(first))
    return rank[comp]


def solve_multicut(graph):
    """GAEC followed by Kernighan-Lin refinement and join lookahead; deterministic."""
    if graph.n_nodes == 0:
        return Segmentation(np.zeros(0, np.int64), 0, np.zeros(0, np.int64), np.zeros(0, np.int64), 0.0)
    best = None
    # deterministic starts: contraction, one cluster, all singletons
    for start in (_gaec(graph), np.zeros(graph.n_nodes, np.int64), np.arange(graph.n_nodes)):
        labels = _split_components(graph, _lookahead(graph, _refine(graph, start)))
        if best is None or graph.objective(labels) < graph.objective(best) - 1e-12:
            best = labels
    return _make_segmentation(graph, best)


def _make_segmentation(graph, labels):
    cut = labels[graph.arcs[:, 0]] != labels[graph.arcs[:, 1]]
    cut_arcs = np.flatnonzero(cut)
    cut_edges = graph.edge_ids[cut_arcs] if graph.edge_ids is not None else cut_arcs
    return Segmentation(labels=labels, n_segments=int(labels.max()) + 1, cut_arcs=cut_arcs,
                        cut_edges=np.asarray(cut_edges), objective=graph.objective(labels))


@lru_cache(maxsize=None)
def _partitions(n):
    """All set partitions of n items as restricted growth strings, (Bell(n), n)."""
    rows = [[0]]
    for _ in range(1, n):
        nxt = []
        for r in rows:
            top = max(r) + 1
            nxt.extend(r + [k] for k in range(top + 1))
        rows = nxt
    out = np.array(rows, np.int8)
    out.setflags(write=False)
    return out


def exhaustive_multicut(graph, max_nodes=10):
    """Exact optimum by enumerating all partitions (small graphs only)."""
    n = graph.n_nodes
    if n > max_nodes:
        raise ValueError(f"exhaustive search limited to {max_nodes} nodes")
    parts = _partitions(n)
    cut = parts[:, graph.arcs[:, 0]] != parts[:, graph.arcs[:, 1]]
    obj = -(cut.astype(float) @ graph.costs)
    best = int(np.argmin(obj))
    labels = _split_components(graph, parts[best].astype(np.int64))
    return _make_segmentation(graph, labels)
