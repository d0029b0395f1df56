"""Command-line front end: ``atmesh <subcommand> [options]``.

Exit codes: 0 success, 1 usage or input error, 2 numerical failure.
"""

import argparse
import json
import logging
import os
import sys
from contextlib import nullcontext
from pathlib import Path

import numpy as np

from .at_solver import ATParams, at_operators, minimize_at
from .dec import build_dec, format_report, verify_dec
from .errors import FlipLimitError, MeshError, SolverError
from .io import load_mesh, save_mesh, save_scalar
from .mesh import add_normal_noise, face_normals
from .metrics import hausdorff_rms
from .normalmap import OBJECT, TANGENT, load_normal_map
from .pipelines import INPAINT_W1, denoise, emboss, extract_feature_edges, inpaint, segment
from .projection import ProjectionParams

log = logging.getLogger("atmesh")

# parameter name -> (flag, type); the same names are accepted in a --params file
PARAMS = {
    "lambda": ("--lambda", float),
    "alpha": ("--alpha", float),
    "eps_start": ("--eps-start", float),
    "eps_end": ("--eps-end", float),
    "eps_div": ("--eps-div", float),
    "inner": ("--inner", int),
    "w1": ("--w1", float),
    "w2": ("--w2", float),
    "iters": ("--iters", int),
    "seed": ("--seed", int),
    "sigma": ("--sigma", float),
    "threshold": ("--threshold", float),
    "levels": ("--levels", int),
    "tol": ("--tol", float),
    "max_flip_abort": ("--max-flip-abort", int),
    "solver": ("--solver", str),
    "passes": ("--passes", int),
}

DEFAULTS = {
    "iters": 4,
    "seed": 0,
    "sigma": 0.3,
    "threshold": 0.5,
    "levels": 0,
    "passes": 1,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _add_params(p):
    g = p.add_argument_group("parameters")
    for name, (flag, typ) in PARAMS.items():
        g.add_argument(flag, dest=name, type=typ, default=None)
    g.add_argument("--params", type=Path, help="TOML file of parameters; flags override it")
    g.add_argument("--report", type=Path,
                   help="write a JSON report here (denoise and inpaint default to <out>.report.json)")
    g.add_argument("--timings", action="store_true", help="include wall-clock timings in the report")


def build_parser():
    parser = _Parser(prog="atmesh", description="Mumford-Shah processing of triangle meshes.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("denoise", help="remove noise while keeping sharp features")
    p.add_argument("--in", dest="inp", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--reference", type=Path, help="clean mesh for Hausdorff tracking")
    _add_params(p)

    p = sub.add_parser("features", help="compute the feature field and feature edges")
    p.add_argument("--in", dest="inp", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path, help="edge list, one 'i j' pair per line")
    _add_params(p)

    p = sub.add_parser("segment", help="piecewise smooth segmentation")
    p.add_argument("--in", dest="inp", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path, help="per-face labels, one per line")
    _add_params(p)

    p = sub.add_parser("inpaint", help="fill holes and restore features")
    p.add_argument("--in", dest="inp", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--fill-all", action="store_true", help="also close the longest boundary loop")
    _add_params(p)

    p = sub.add_parser("emboss", help="emboss a normal map into the geometry")
    p.add_argument("--in", dest="inp", required=True, type=Path)
    p.add_argument("--map", required=True, type=Path, help="P6 PPM (or PNG with Pillow)")
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--object-space", action="store_true")
    _add_params(p)

    p = sub.add_parser("noise", help="add Gaussian noise along vertex normals")
    p.add_argument("--in", dest="inp", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    _add_params(p)

    p = sub.add_parser("metrics", help="normalized Hausdorff RMS distance x 100")
    p.add_argument("--a", required=True, type=Path)
    p.add_argument("--b", required=True, type=Path)
    _add_params(p)

    p = sub.add_parser("check", help="verify the DEC operators of a mesh")
    p.add_argument("--in", dest="inp", required=True, type=Path)
    _add_params(p)
    return parser


def _load_toml(path):
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    unknown = sorted(set(data) - set(PARAMS))
    if unknown:
        raise UsageError(f"unknown parameter(s) in {path}: {', '.join(unknown)}")
    out = {}
    for k, val in data.items():
        typ = PARAMS[k][1]
        if typ is int and not isinstance(val, int):
            raise UsageError(f"parameter {k!r} must be an integer")
        out[k] = typ(val)
    return out


def resolve_params(args):
    """Defaults, then the --params file, then explicit flags."""
    values = dict(DEFAULTS)
    if getattr(args, "params", None) is not None:
        values.update(_load_toml(args.params))
    for name in PARAMS:
        val = getattr(args, name, None)
        if val is not None:
            values[name] = val
    return values


def at_params(values):
    kw = {}
    for name, field in (("lambda", "lam"), ("alpha", "alpha"), ("eps_start", "eps_start"),
                        ("eps_end", "eps_end"), ("eps_div", "eps_divisor"),
                        ("inner", "inner_alternations"), ("tol", "solver_tol"), ("solver", "solver")):
        if name in values:
            kw[field] = values[name]
    return ATParams(**kw)


def proj_params(values, w1_default=None):
    kw = {}
    for name, field in (("w1", "w1"), ("w2", "w2"), ("tol", "solver_tol"),
                        ("solver", "solver"), ("max_flip_abort", "max_flips")):
        if name in values:
            kw[field] = values[name]
    if "w1" not in kw and w1_default is not None:
        kw["w1"] = w1_default
    return ProjectionParams(**kw)


def _validate(values):
    checks = {
        "iters": lambda x: x >= 1,
        "sigma": lambda x: x >= 0,
        "threshold": lambda x: 0 <= x <= 1,
        "levels": lambda x: x >= 0,
        "tol": lambda x: x > 0,
        "max_flip_abort": lambda x: x >= 0,
        "passes": lambda x: x >= 1,
        "solver": lambda x: x in ("cg", "direct"),
    }
    for name, ok in checks.items():
        if name in values and not ok(values[name]):
            raise ValueError(f"invalid value for {PARAMS[name][0]}: {values[name]!r}")


def _write_report(path, data):
    if path is None:
        return
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _default_report(args):
    return args.report if args.report is not None else Path(args.out).with_suffix(".report.json")


def _report_dict(report, args):
    d = report.to_dict()
    if not args.timings:
        d.pop("timings")
        d.pop("total_time")
    return d


def cmd_denoise(args, values):
    mesh = load_mesh(args.inp)
    ref = load_mesh(args.reference) if args.reference else None
    out, v, report = denoise(mesh, at_params(values), proj_params(values), values["iters"], reference=ref)
    save_mesh(out, args.out, scalar=v)
    _write_report(_default_report(args), _report_dict(report, args))
    print(f"denoised {mesh.n_vertices} vertices in {values['iters']} iterations; "
          f"{sum(report.flipped)} flipped triangles")


def cmd_features(args, values):
    mesh = load_mesh(args.inp)
    state = minimize_at(face_normals(mesh), at_params(values), at_operators(mesh))
    v = state.clamped_v()
    edges = extract_feature_edges(v, mesh, values["threshold"])
    with open(args.out, "w") as fh:
        fh.writelines(f"{i} {j}\n" for i, j in mesh.edges[edges].tolist())
    save_scalar(v, Path(args.out).with_suffix(".v.csv"))
    _write_report(args.report, {"feature_edges": int(len(edges)), "min_v": float(v.min()),
                                "energy": state.energy_trace[-1].energy})
    print(f"{len(edges)} feature edges")


def cmd_segment(args, values):
    mesh = load_mesh(args.inp)
    seg, p = segment(mesh, at_params(values))
    seg.write_labels(args.out)
    seg.write_cut_edges(Path(args.out).with_suffix(".cuts.txt"))
    _write_report(args.report, {"segments": seg.n_segments, "objective": seg.objective,
                                "cut_edges": int(len(seg.cut_edges))})
    print(f"{seg.n_segments} segments")


def cmd_inpaint(args, values):
    mesh = load_mesh(args.inp)
    res = inpaint(mesh, at_params(values), proj_params(values, INPAINT_W1), passes=values["passes"],
                  keep_outer=not args.fill_all)
    save_mesh(res.mesh, args.out, scalar=res.v)
    d = _report_dict(res.report, args)
    d["new_vertices"] = res.mesh.n_vertices - res.n_original_vertices
    d["new_faces"] = int(res.new_face_mask.sum())
    _write_report(_default_report(args), d)
    print(f"filled {d['new_faces']} faces with {d['new_vertices']} new vertices")


def cmd_emboss(args, values):
    mesh = load_mesh(args.inp)
    nmap = load_normal_map(args.map, OBJECT if args.object_space else TANGENT)
    out = emboss(mesh, nmap, values["levels"], proj_params(values))
    save_mesh(out, args.out)
    print(f"embossed mesh with {out.n_faces} faces")


def cmd_noise(args, values):
    mesh = load_mesh(args.inp)
    out = add_normal_noise(mesh, values["sigma"], values["seed"])
    save_mesh(out, args.out)


def cmd_metrics(args, values):
    a, b = load_mesh(args.a), load_mesh(args.b)
    h = hausdorff_rms(a, b, seed=values["seed"])
    print(f"{100.0 * h:.4f}")


def cmd_check(args, values):
    mesh = load_mesh(args.inp)
    checks = verify_dec(build_dec(mesh), mesh)
    print(format_report(checks))
    if not all(c.passed for c in checks):
        raise SolverError("DEC verification failed")


COMMANDS = {
    "denoise": cmd_denoise,
    "features": cmd_features,
    "segment": cmd_segment,
    "inpaint": cmd_inpaint,
    "emboss": cmd_emboss,
    "noise": cmd_noise,
    "metrics": cmd_metrics,
    "check": cmd_check,
}


def _thread_limit():
    raw = os.environ.get("ATMESH_THREADS")
    if not raw:
        return nullcontext()
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"ATMESH_THREADS must be a positive integer, got {raw!r}")
    if n < 1:
        raise ValueError(f"ATMESH_THREADS must be a positive integer, got {raw!r}")
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        return nullcontext()
    return threadpool_limits(limits=n)


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return 1
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(name)s: %(message)s")
        values = resolve_params(args)
        _validate(values)
        with _thread_limit():
            COMMANDS[args.command](args, values)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (SolverError, FlipLimitError, np.linalg.LinAlgError) as exc:
        print(f"atmesh: numerical failure: {exc}", file=sys.stderr)
        return 2
    except (ValueError, MeshError, OSError) as exc:
        print(f"atmesh: error: {exc}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run())
