"""Normal maps: image I/O, bilinear decoding and UV tangent frames."""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import MeshError, MeshParseError
from .mesh import face_normals

TANGENT = "tangent"
OBJECT = "object"


@dataclass
class NormalMap:
    """RGB image of encoded normals; ``pixels`` is (height, width, 3) uint8.

    Row 0 is the top of the image, so ``v = 1`` in texture space.
    """

    width: int
    height: int
    pixels: np.ndarray
    space: str = TANGENT

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, np.uint8)
        if self.pixels.shape != (self.height, self.width, 3):
            raise ValueError(f"pixels must have shape ({self.height}, {self.width}, 3)")
        if self.space not in (TANGENT, OBJECT):
            raise ValueError(f"space must be {TANGENT!r} or {OBJECT!r}")

    @classmethod
    def constant(cls, rgb, width=4, height=4, space=TANGENT):
        px = np.broadcast_to(np.asarray(rgb, np.uint8), (height, width, 3)).copy()
        return cls(width, height, px, space)

    def sample(self, uv):
        """Bilinearly interpolated and decoded (unnormalized) vectors at ``uv`` (n, 2)."""
        uv = np.clip(np.atleast_2d(np.asarray(uv, float)), 0.0, 1.0)
        x = uv[:, 0] * (self.width - 1)
        y = (1.0 - uv[:, 1]) * (self.height - 1)
        x0 = np.floor(x).astype(int)
        y0 = np.floor(y).astype(int)
        x1 = np.minimum(x0 + 1, self.width - 1)
        y1 = np.minimum(y0 + 1, self.height - 1)
        fx = (x - x0)[:, None]
        fy = (y - y0)[:, None]
        px = self.pixels.astype(float)
        top = px[y0, x0] * (1 - fx) + px[y0, x1] * fx
        bot = px[y1, x0] * (1 - fx) + px[y1, x1] * fx
        c = top * (1 - fy) + bot * fy
        return decode_channels(c)


def decode_channels(c):
    """Map 8-bit channel values to [-1, 1] as ``2 c / 255 - 1``.

    Zero has no exact 8-bit code; values within one quantization step of it
    (codes 127 and 128 and anything interpolated between them) decode to 0,
    so the customary flat color (128, 128, 255) is exactly (0, 0, 1).
    """
    x = 2.0 * np.asarray(c, float) / 255.0 - 1.0
    x[np.abs(x) <= 1.0 / 255.0 + 1e-12] = 0.0
    return x


def _unit(x):
    n = np.linalg.norm(x, axis=-1, keepdims=True)
    n[n == 0] = 1.0
    return x / n


def decode_normal_map(nmap, uv, frame=None):
    """Unit normals at texture coordinates ``uv`` (n, 2).

    For tangent-space maps ``frame`` is an (n, 3, 3) array whose columns are
    the tangent, bitangent and normal; without a frame the identity is used.
    """
    uv = np.atleast_2d(np.asarray(uv, float))
    if np.any(uv < -1e-12) or np.any(uv > 1 + 1e-12):
        raise ValueError("uv coordinates must lie in [0, 1]")
    n = nmap.sample(uv)
    if nmap.space == TANGENT and frame is not None:
        n = np.einsum("nij,nj->ni", np.asarray(frame, float), n)
    return _unit(n)


def vertex_tangent_frames(mesh):
    """Per-vertex orthonormal (T, B, N) frames from UV gradients, as (|V|, 3, 3) columns."""
    if mesh.uvs is None:
        raise MeshError("mesh has no UV coordinates")
    p = mesh.vertices[mesh.triangles]
    t = mesh.uvs[mesh.triangles]
    e1, e2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
    d1, d2 = t[:, 1] - t[:, 0], t[:, 2] - t[:, 0]
    det = d1[:, 0] * d2[:, 1] - d2[:, 0] * d1[:, 1]
    r = np.where(np.abs(det) > 1e-300, 1.0 / np.where(det == 0, 1.0, det), 0.0)[:, None]
    tan = (e1 * d2[:, 1:2] - e2 * d1[:, 1:2]) * r
    bit = (e2 * d1[:, 0:1] - e1 * d2[:, 0:1]) * r
    T = np.zeros((mesh.n_vertices, 3))
    B = np.zeros((mesh.n_vertices, 3))
    for k in range(3):
        np.add.at(T, mesh.triangles[:, k], tan)
        np.add.at(B, mesh.triangles[:, k], bit)
    N = mesh.vertex_normals
    return _orthonormal_frames(T, B, N)


def _orthonormal_frames(T, B, N):
    N = _unit(N)
    T = _unit(T - N * np.sum(N * T, axis=1, keepdims=True))
    Bn = np.cross(N, T)
    sign = np.where(np.sum(Bn * B, axis=1) < 0, -1.0, 1.0)[:, None]
    return np.stack([T, sign * Bn, N], axis=2)


def face_tangent_frames(mesh):
    """Per-face frames: vertex frames averaged over the corners, re-orthonormalized
    against the face normal."""
    vf = vertex_tangent_frames(mesh)
    corners = vf[mesh.triangles]
    avg = corners.mean(axis=1)
    return _orthonormal_frames(avg[:, :, 0], avg[:, :, 1], face_normals(mesh))


def read_ppm(path, space=TANGENT):
    data = Path(path).read_bytes()
    tokens, pos = [], 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise MeshParseError("truncated PPM header", path=str(path))
        tokens.append(data[start:pos])
    if tokens[0] != b"P6":
        raise MeshParseError("only binary PPM (P6) is supported", path=str(path))
    w, h, maxval = (int(t) for t in tokens[1:])
    if maxval != 255:
        raise MeshParseError("only 8-bit PPM is supported", path=str(path))
    pos += 1
    raw = np.frombuffer(data, np.uint8, count=w * h * 3, offset=pos)
    return NormalMap(w, h, raw.reshape(h, w, 3), space)


def write_ppm(nmap, path):
    with open(path, "wb") as fh:
        fh.write(f"P6\n{nmap.width} {nmap.height}\n255\n".encode())
        fh.write(np.ascontiguousarray(nmap.pixels).tobytes())


def load_normal_map(path, space=TANGENT):
    """Read a P6 PPM, or a PNG when Pillow is installed."""
    path = Path(path)
    if path.suffix.lower() == ".png":
        try:
            from PIL import Image
        except ImportError as exc:
            raise MeshError("reading PNG normal maps requires Pillow") from exc
        px = np.asarray(Image.open(path).convert("RGB"))
        return NormalMap(px.shape[1], px.shape[0], px, space)
    return read_ppm(path, space)


def encode_normals(normals):
    """Inverse of the decoding map, rounded to 8-bit channels."""
    n = _unit(np.asarray(normals, float))
    return np.clip(np.round((n + 1.0) * 255.0 / 2.0), 0, 255).astype(np.uint8)
