"""OBJ / OFF mesh files and sidecar scalar CSV files."""

import logging
from pathlib import Path

import numpy as np

from .errors import MeshParseError
from .mesh import TriangleMesh

log = logging.getLogger(__name__)

FORMATS = ("obj", "off")


def _infer_format(path, fmt):
    if fmt is None:
        fmt = Path(path).suffix.lstrip(".")
    fmt = fmt.lower()
    if fmt not in FORMATS:
        raise ValueError(f"unsupported mesh format {fmt!r}; expected one of {FORMATS}")
    return fmt


def _fan(poly):
    return [[poly[0], poly[k], poly[k + 1]] for k in range(1, len(poly) - 1)]


def _parse_obj(lines, path):
    verts, texcoords, tris = [], [], []
    corner_uv = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        tag = tok[0]
        try:
            if tag == "v":
                verts.append([float(x) for x in tok[1:4]])
                if len(verts[-1]) != 3:
                    raise ValueError("vertex needs 3 coordinates")
            elif tag == "vt":
                texcoords.append([float(x) for x in tok[1:3]])
            elif tag == "f":
                poly, polyuv = [], []
                for item in tok[1:]:
                    parts = item.split("/")
                    vi = int(parts[0])
                    if vi == 0:
                        raise ValueError("OBJ indices are 1-based; got 0")
                    vi = vi - 1 if vi > 0 else len(verts) + vi
                    if not 0 <= vi < len(verts):
                        raise ValueError(f"vertex index {parts[0]} out of range")
                    poly.append(vi)
                    if len(parts) > 1 and parts[1]:
                        ti = int(parts[1])
                        if ti == 0:
                            raise ValueError("OBJ indices are 1-based; got 0")
                        ti = ti - 1 if ti > 0 else len(texcoords) + ti
                        if not 0 <= ti < len(texcoords):
                            raise ValueError(f"texture index {parts[1]} out of range")
                        polyuv.append(ti)
                if len(poly) < 3:
                    raise ValueError("face needs at least 3 vertices")
                tris.extend(_fan(poly))
                for vi, ti in zip(poly, polyuv):
                    corner_uv.setdefault(vi, ti)
            # vn, vp, o, g, s, usemtl, mtllib: ignored
        except ValueError as exc:
            raise MeshParseError(str(exc), line=lineno, path=path) from None
    uvs = None
    if corner_uv:
        if len(corner_uv) != len(verts):
            log.warning("%s: texture coordinates missing on some vertices; dropping uvs", path)
        else:
            uvs = np.array([texcoords[corner_uv[i]] for i in range(len(verts))])
    return np.array(verts, float).reshape(-1, 3), np.array(tris, np.int64).reshape(-1, 3), uvs


def _parse_off(lines, path):
    items = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            items.append((lineno, line.split()))
    if not items or not items[0][1][0].endswith("OFF"):
        raise MeshParseError("missing OFF header", line=items[0][0] if items else 1, path=path)
    header = items[0][1][1:]
    rest = items[1:]
    if not header:
        if not rest:
            raise MeshParseError("missing element counts", line=items[0][0], path=path)
        lineno, header = rest[0]
        rest = rest[1:]
    try:
        nv, nf = int(header[0]), int(header[1])
    except (ValueError, IndexError):
        raise MeshParseError("bad element counts", line=items[0][0], path=path) from None
    if len(rest) < nv + nf:
        raise MeshParseError("file ends before all elements were read", line=len(lines), path=path)
    verts, tris = [], []
    for lineno, tok in rest[:nv]:
        try:
            verts.append([float(x) for x in tok[:3]])
        except ValueError:
            raise MeshParseError("bad vertex record", line=lineno, path=path) from None
    for lineno, tok in rest[nv:nv + nf]:
        try:
            k = int(tok[0])
            poly = [int(x) for x in tok[1:1 + k]]
        except ValueError:
            raise MeshParseError("bad face record", line=lineno, path=path) from None
        if len(poly) != k or k < 3:
            raise MeshParseError("bad face record", line=lineno, path=path)
        if min(poly) < 0 or max(poly) >= nv:
            raise MeshParseError("vertex index out of range", line=lineno, path=path)
        tris.extend(_fan(poly))
    return np.array(verts, float).reshape(-1, 3), np.array(tris, np.int64).reshape(-1, 3), None


def load_mesh(path, fmt=None):
    """Read an OBJ or OFF file into a validated TriangleMesh.

    Polygons are fan-triangulated. OBJ texture coordinates are kept as
    per-vertex uvs when every vertex has one.
    """
    fmt = _infer_format(path, fmt)
    with open(path) as fh:
        lines = fh.readlines()
    parse = _parse_obj if fmt == "obj" else _parse_off
    verts, tris, uvs = parse(lines, str(path))
    return TriangleMesh(verts, tris, uvs)


def scalar_path_for(path):
    path = Path(path)
    return path.with_name(path.stem + ".v.csv")


def save_scalar(values, path):
    """One value per line, vertex order."""
    with open(path, "w") as fh:
        for x in np.asarray(values, float):
            fh.write(f"{x:.17g}\n")


def load_scalar(path):
    return np.loadtxt(path, dtype=float, ndmin=1)


def save_mesh(mesh, path, fmt=None, scalar=None, scalar_path=None):
    """Write ``mesh``; an optional per-vertex scalar goes to a sidecar CSV.

    Returns the sidecar path when one was written.
    """
    fmt = _infer_format(path, fmt)
    if scalar is not None and len(scalar) != mesh.n_vertices:
        raise ValueError("scalar must have one value per vertex")
    out = []
    if fmt == "obj":
        out += [f"v {x:.17g} {y:.17g} {z:.17g}\n" for x, y, z in mesh.vertices]
        if mesh.uvs is not None:
            out += [f"vt {s:.17g} {t:.17g}\n" for s, t in mesh.uvs]
            out += [f"f {a}/{a} {b}/{b} {c}/{c}\n" for a, b, c in (mesh.triangles + 1).tolist()]
        else:
            out += [f"f {a} {b} {c}\n" for a, b, c in (mesh.triangles + 1).tolist()]
    else:
        out.append("OFF\n")
        out.append(f"{mesh.n_vertices} {mesh.n_faces} {mesh.n_edges}\n")
        out += [f"{x:.17g} {y:.17g} {z:.17g}\n" for x, y, z in mesh.vertices]
        out += [f"3 {a} {b} {c}\n" for a, b, c in mesh.triangles.tolist()]
    with open(path, "w") as fh:
        fh.writelines(out)
    if scalar is not None:
        scalar_path = scalar_path or scalar_path_for(path)
        save_scalar(scalar, scalar_path)
        return Path(scalar_path)
    return None
