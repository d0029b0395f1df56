"""End-to-end applications: denoising, feature extraction, segmentation,
inpainting and embossing."""

import json
import logging
import time
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .at_solver import ATParams, at_operators, minimize_at
from .errors import HoleFillingError, MeshError
from .holes import fill_holes, hole_loops
from .mesh import denormalize, face_normals, normalize_to_unit_ball, subdivide_midpoint
from .metrics import hausdorff_rms
from .multicut import FaceGraph, edge_split_probabilities, solve_multicut
from .normalmap import TANGENT, decode_normal_map, face_tangent_frames
from .projection import ProjectionParams, project_vertices

log = logging.getLogger(__name__)


@dataclass
class PipelineReport:
    """Per-iteration diagnostics of a pipeline run; times are in seconds."""

    energies: list = field(default_factory=list)
    energy_traces: list = field(default_factory=list)
    hausdorff: list = field(default_factory=list)
    flipped: list = field(default_factory=list)
    timings: dict = field(default_factory=lambda: {"ms": [], "projection": []})
    total_time: float = 0.0

    @property
    def iterations(self):
        return len(self.energies)

    def to_dict(self):
        return {
            "iterations": self.iterations,
            "energies": self.energies,
            "hausdorff": self.hausdorff,
            "flipped": self.flipped,
            "timings": self.timings,
            "total_time": self.total_time,
            "energy_traces": [
                [{"eps": e.eps, "iteration": e.iteration, "step": e.step, "energy": e.energy} for e in tr]
                for tr in self.energy_traces
            ],
        }

    def write_json(self, path, include_timings=True):
        d = self.to_dict()
        if not include_timings:
            d.pop("timings")
            d.pop("total_time")
        with open(path, "w") as fh:
            json.dump(d, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _ms_and_project(mesh, g, at, proj, report):
    t0 = time.perf_counter()
    state = minimize_at(g, at, at_operators(mesh))
    t1 = time.perf_counter()
    res = project_vertices(mesh, state.normalized_u(), state.clamped_v(), proj)
    t2 = time.perf_counter()
    report.energies.append(state.energy_trace[-1].energy if state.energy_trace else 0.0)
    report.energy_traces.append(state.energy_trace)
    report.flipped.append(res.flipped)
    report.timings["ms"].append(t1 - t0)
    report.timings["projection"].append(t2 - t1)
    return state, res.mesh


def denoise(mesh, at=None, proj=None, outer_iters=4, reference=None):
    """Alternate AT regularization of face normals with vertex projection.

    The mesh is normalized to the unit ball for the computation and mapped
    back afterwards. Returns ``(mesh, v, report)`` with ``v`` clamped to
    [0, 1]. With a ``reference`` mesh the Hausdorff RMS distance to it is
    recorded after every iteration.
    """
    at = at or ATParams()
    proj = proj or ProjectionParams()
    if outer_iters < 1:
        raise ValueError("outer_iters must be >= 1")
    start = time.perf_counter()
    report = PipelineReport()
    cur, scale, center = normalize_to_unit_ball(mesh)
    state = None
    for it in range(outer_iters):
        state, cur = _ms_and_project(cur, face_normals(cur), at, proj, report)
        log.info("denoise iteration %d: energy %.6g, %d flipped", it, report.energies[-1], report.flipped[-1])
        if reference is not None:
            report.hausdorff.append(hausdorff_rms(reference, denormalize(cur, scale, center)))
    report.total_time = time.perf_counter() - start
    return denormalize(cur, scale, center), state.clamped_v(), report


def extract_feature_edges(v, mesh, threshold=0.5):
    """Indices of edges whose two endpoint values both fall below ``threshold``."""
    v = np.asarray(v, float)
    e = mesh.edges
    return np.flatnonzero((v[e[:, 0]] < threshold) & (v[e[:, 1]] < threshold))


def segment(mesh, at=None, angle_deg=5.0):
    """Feature-aware segmentation by multicut on the face adjacency graph.

    Returns ``(segmentation, probabilities)``; probabilities are aligned with
    ``mesh.interior_edges``.
    """
    at = at or ATParams()
    g = face_normals(mesh)
    state = minimize_at(g, at, at_operators(mesh))
    p = edge_split_probabilities(state.clamped_v(), state.normalized_u(), mesh, angle_deg=angle_deg)
    return solve_multicut(FaceGraph.from_mesh(mesh, p)), p


def _graph_distance(mesh, sources, targets):
    """Max over ``targets`` of the edge-count distance to the nearest source."""
    nbrs = mesh.vertex_neighbors
    dist = np.full(mesh.n_vertices, -1)
    queue = deque()
    for s in sources:
        dist[s] = 0
        queue.append(s)
    while queue:
        a = queue.popleft()
        for b in nbrs[a]:
            if dist[b] < 0:
                dist[b] = dist[a] + 1
                queue.append(b)
    d = dist[np.asarray(targets, int)]
    return int(d.max()) if len(d) else 0


@dataclass
class InpaintResult:
    mesh: object
    v: np.ndarray
    new_face_mask: np.ndarray
    n_original_vertices: int
    report: PipelineReport


INPAINT_W1 = 0.1


def inpaint(mesh, at=None, proj=None, passes=1, data_weight=1000.0, lambda_inside=0.1,
            alpha_inside=0.0, keep_outer=True):
    """Fill the holes of ``mesh`` and reconstruct the missing geometry.

    With ``keep_outer`` (default) and several boundary loops, the longest loop
    is taken to be the outer border of an open surface and stays open.

    Outside the filled patches the effective alpha and w2 are ``data_weight``.
    Inside, w2 is 0, lambda is multiplied by ``lambda_inside`` and alpha is
    ``alpha_inside``: the normals of the provisional patch are not data, and
    attaching to them lets the feature field collapse over the whole patch.
    The epsilon schedule starts at least at the hole radius measured in edges.
    Without ``proj`` the fairness weight is ``INPAINT_W1``.
    """
    at = at or ATParams()
    proj = proj or ProjectionParams(w1=INPAINT_W1)
    if alpha_inside < 0:
        raise ValueError("alpha_inside must be >= 0")
    if mesh.is_closed:
        raise HoleFillingError("no holes found")
    start = time.perf_counter()
    report = PipelineReport()
    loops = hole_loops(mesh, keep_outer)
    norm, scale, center = normalize_to_unit_ball(mesh)
    filled, patch = fill_holes(norm, keep_outer=keep_outer)
    n_orig = mesh.n_vertices

    patch_vertices = np.zeros(filled.n_vertices, bool)
    patch_vertices[filled.triangles[patch].reshape(-1)] = True
    e = filled.edges
    inside_edge = patch_vertices[e[:, 0]] & patch_vertices[e[:, 1]]
    loop_vertices = np.concatenate([np.asarray(l, int) for l in loops])
    radius = _graph_distance(filled, loop_vertices, np.flatnonzero(patch_vertices))

    at = replace(
        at,
        eps_start=max(at.eps_start, float(radius)),
        alpha_face_mask=np.where(patch, alpha_inside / at.alpha, data_weight / at.alpha),
        lambda_edge_scale=np.where(inside_edge, lambda_inside, 1.0),
        lambda_vertex_scale=np.where(patch_vertices, lambda_inside, 1.0),
    )
    w2_mask = np.zeros(filled.n_vertices)
    w2_mask[:n_orig] = data_weight / proj.w2
    proj = replace(proj, w2_vertex_mask=w2_mask)

    cur, state = filled, None
    for _ in range(passes):
        state, cur = _ms_and_project(cur, face_normals(cur), at, proj, report)
    report.total_time = time.perf_counter() - start
    return InpaintResult(denormalize(cur, scale, center), state.clamped_v(), patch, n_orig, report)


def emboss(mesh, nmap, levels=0, proj=None):
    """Subdivide ``levels`` times and project vertices onto the normals of ``nmap``.

    Target normals are sampled at face UV centroids; the feature field is
    taken as 1 everywhere.
    """
    proj = proj or ProjectionParams()
    if mesh.uvs is None:
        raise MeshError("embossing requires UV coordinates")
    if levels < 0:
        raise ValueError("levels must be >= 0")
    norm, scale, center = normalize_to_unit_ball(mesh)
    sub = subdivide_midpoint(norm, levels)
    uv = sub.uvs[sub.triangles].mean(axis=1)
    frames = face_tangent_frames(sub) if nmap.space == TANGENT else None
    u = decode_normal_map(nmap, uv, frames)
    res = project_vertices(sub, u, np.ones(sub.n_vertices), proj)
    return denormalize(res.mesh, scale, center)
