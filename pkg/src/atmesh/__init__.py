"""Mumford-Shah / Ambrosio-Tortorelli processing of triangle meshes.

Face normals are regularized by minimizing a discrete Ambrosio-Tortorelli
energy built from discrete exterior calculus operators; the resulting
piecewise smooth normal field and per-vertex feature field drive mesh
denoising, segmentation, inpainting and normal-map embossing.
"""

from .at_solver import ATParams, ATState, at_energy, at_operators, minimize_at, solve_u, solve_v
from .dec import DecOperators, build_dec, verify_dec
from .errors import (
    ConvergenceError,
    DegenerateTriangleError,
    FlipLimitError,
    HoleFillingError,
    IndefiniteMatrixError,
    MeshError,
    MeshParseError,
    NonManifoldError,
    SolverError,
)
from .holes import fill_holes
from .io import load_mesh, save_mesh
from .linalg import spd_solve
from .mesh import (
    TriangleMesh,
    add_normal_noise,
    face_normals,
    normalize_to_unit_ball,
    subdivide_midpoint,
)
from .metrics import hausdorff_rms
from .multicut import FaceGraph, Segmentation, edge_split_probabilities, solve_multicut
from .normalmap import NormalMap, decode_normal_map
from .pipelines import PipelineReport, denoise, emboss, extract_feature_edges, inpaint, segment
from .projection import ProjectionParams, project_vertices

__version__ = "0.1.0"
