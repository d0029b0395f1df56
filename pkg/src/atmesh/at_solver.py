"""Ambrosio-Tortorelli energy on a triangle mesh and its alternating minimization.

``u`` and ``g`` are (|F|, 3) arrays (one normal-like vector per face), ``v`` is
a (|V|,) feature field. ``v`` close to 1 marks smooth regions and drops
towards 0 on discontinuities of ``u``.
"""

import csv
import logging
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
import scipy.sparse as sp

from .dec import build_dec
from .linalg import spd_solve

log = logging.getLogger(__name__)


@dataclass
class ATParams:
    """Knobs of the AT functional and its epsilon schedule.

    The smoothness weight on ``|v grad u|^2`` is fixed to 1.
    """

    alpha: float = 0.07
    lam: float = 0.06
    eps_start: float = 2.0
    eps_end: float = 0.25
    eps_divisor: float = 2.0
    inner_alternations: int = 4
    stop_rel_decrease: float = 1e-7
    solver_tol: float = 1e-8
    solver: str = "direct"
    alpha_face_mask: Optional[np.ndarray] = None
    # per-edge / per-vertex multipliers on lambda (inpainting uses 0.1 inside holes)
    lambda_edge_scale: Optional[np.ndarray] = None
    lambda_vertex_scale: Optional[np.ndarray] = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be > 0")
        if not self.lam > 0:
            raise ValueError("lambda must be > 0")
        if not (self.eps_start >= self.eps_end > 0):
            raise ValueError("need eps_start >= eps_end > 0")
        if not self.eps_divisor > 1:
            raise ValueError("eps_divisor must be > 1")
        if self.inner_alternations < 1:
            raise ValueError("inner_alternations must be >= 1")
        for name in ("alpha_face_mask", "lambda_edge_scale", "lambda_vertex_scale"):
            m = getattr(self, name)
            if m is not None and np.any(np.asarray(m) < 0):
                raise ValueError(f"{name} entries must be >= 0")

    def eps_schedule(self):
        eps, out = self.eps_start, []
        while eps >= self.eps_end * (1 - 1e-12):
            out.append(eps)
            eps /= self.eps_divisor
        return out

    def _face_weight(self, nf):
        return np.ones(nf) if self.alpha_face_mask is None else np.asarray(self.alpha_face_mask, float)

    def _edge_lambda(self, ne):
        s = np.ones(ne) if self.lambda_edge_scale is None else np.asarray(self.lambda_edge_scale, float)
        return self.lam * s

    def _vertex_lambda(self, nv):
        s = np.ones(nv) if self.lambda_vertex_scale is None else np.asarray(self.lambda_vertex_scale, float)
        return self.lam * s


# Clamp used for solver-facing operators: caps S1bar at 1e4 so the u-system
# stays solvable to a 1e-8 relative residual on meshes with right triangles.
SOLVER_KAPPA = 1e-4


def at_operators(mesh, kappa=SOLVER_KAPPA):
    """DEC operators for the AT energy, with lengths in units of the mean edge length.

    Measuring lengths in edge units makes ``eps``, ``alpha`` and ``lambda``
    independent of the mesh's absolute size and resolution.
    """
    h = mesh.mean_edge_length
    return build_dec(mesh.with_vertices(mesh.vertices / h), kappa=kappa)


class TraceEntry(NamedTuple):
    eps: float
    iteration: int
    step: str
    energy: float


@dataclass
class ATState:
    u: np.ndarray
    v: np.ndarray
    energy_trace: list = field(default_factory=list)

    def normalized_u(self):
        n = np.linalg.norm(self.u, axis=1, keepdims=True)
        n[n == 0] = 1.0
        return self.u / n

    def clamped_v(self):
        return np.clip(self.v, 0.0, 1.0)

    def write_trace(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["eps", "iteration", "step", "energy"])
            for e in self.energy_trace:
                w.writerow([repr(e.eps), e.iteration, e.step, repr(e.energy)])


def _check(u, v, g, ops):
    nf, nv = ops.n_faces, ops.n_vertices
    if u.shape != (nf, 3) or g.shape != (nf, 3):
        raise ValueError(f"u and g must have shape ({nf}, 3); got {u.shape}, {g.shape}")
    if v.shape != (nv,):
        raise ValueError(f"v must have shape ({nv},); got {v.shape}")


def energy_terms(u, v, g, eps, params, ops):
    """The four AT terms: data, cross, feature-gradient and feature-mass."""
    u, v, g = (np.asarray(a, float) for a in (u, v, g))
    _check(u, v, g, ops)
    w = params.alpha * params._face_weight(ops.n_faces) * ops.S0bar
    d = u - g
    data = float(np.sum(w[:, None] * d * d))
    mv = ops.M_int @ v
    bu = ops.B @ u
    cross = float(np.sum((ops.S1bar * mv * mv)[:, None] * bu * bu))
    av = ops.A @ v
    grad = eps * float(np.sum(params._edge_lambda(len(av)) * ops.S1 * av * av))
    one_minus = 1.0 - v
    mass = float(np.sum(params._vertex_lambda(len(v)) * ops.S0 * one_minus ** 2)) / (4.0 * eps)
    return data, cross, grad, mass


def at_energy(u, v, g, eps, params, ops):
    """Discrete AT energy summed over the three coordinates of ``u``."""
    return sum(energy_terms(u, v, g, eps, params, ops))


def u_system(v, params, ops):
    """Left-hand matrix and data weights of the u-subproblem."""
    w = params.alpha * params._face_weight(ops.n_faces) * ops.S0bar
    mv = ops.M_int @ v
    B = ops.B
    K = (B.T @ sp.diags(ops.S1bar * mv * mv) @ B).tocsr()
    return (sp.diags(w) + K).tocsr(), w


def v_system(u, eps, params, ops):
    """Left-hand matrix and right-hand side of the v-subproblem."""
    nv = ops.n_vertices
    lam_v = params._vertex_lambda(nv)
    lam_e = params._edge_lambda(ops.A.shape[0])
    bu = ops.B @ u
    edge_w = ops.S1bar * np.sum(bu * bu, axis=1)
    Mi = ops.M_int
    lhs = (
        sp.diags(lam_v * ops.S0 / (4.0 * eps))
        + eps * (ops.A.T @ sp.diags(lam_e * ops.S1) @ ops.A)
        + Mi.T @ sp.diags(edge_w) @ Mi
    ).tocsr()
    rhs = lam_v * ops.S0 / (4.0 * eps)
    return lhs, rhs


def solve_u(v, g, eps, params, ops):
    """Minimize the AT energy over ``u`` with ``v`` fixed.

    ``eps`` does not enter the u-subproblem; it is accepted for symmetry with
    :func:`solve_v`.
    """
    lhs, w = u_system(np.asarray(v, float), params, ops)
    rhs = w[:, None] * np.asarray(g, float)
    return spd_solve(lhs, rhs, tol=params.solver_tol, method=params.solver, check_symmetry=False)


def solve_v(u, eps, params, ops):
    """Minimize the AT energy over ``v`` with ``u`` fixed."""
    lhs, rhs = v_system(np.asarray(u, float), eps, params, ops)
    return spd_solve(lhs, rhs, tol=params.solver_tol, method=params.solver, check_symmetry=False)


def minimize_at(g, params, ops, callback=None):
    """Alternating minimization with a decreasing epsilon schedule.

    Starts from ``u = g`` and ``v = 1``. For each epsilon in the schedule, up to
    ``inner_alternations`` rounds of (solve_u, solve_v) are run, stopping early
    once the relative energy decrease of a round falls below
    ``stop_rel_decrease``. The energy is recorded after every solve.
    """
    g = np.asarray(g, float)
    u = g.copy()
    v = np.ones(ops.n_vertices)
    trace = []
    for eps in params.eps_schedule():
        prev = at_energy(u, v, g, eps, params, ops)
        for it in range(params.inner_alternations):
            u = solve_u(v, g, eps, params, ops)
            trace.append(TraceEntry(eps, it, "u", at_energy(u, v, g, eps, params, ops)))
            v = solve_v(u, eps, params, ops)
            e = at_energy(u, v, g, eps, params, ops)
            trace.append(TraceEntry(eps, it, "v", e))
            if callback is not None:
                callback(eps, it, u, v, e)
            log.debug("eps=%g it=%d energy=%.10g", eps, it, e)
            if prev - e <= params.stop_rel_decrease * abs(prev):
                break
            prev = e
    return ATState(u=u, v=v, energy_trace=trace)

