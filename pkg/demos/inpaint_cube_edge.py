"""Cut a hole across a cube edge, fill it and check that the crease comes back."""

import numpy as np

from atmesh import shapes
from atmesh.mesh import TriangleMesh
from atmesh.pipelines import inpaint

cube = shapes.cube(4)
keep = np.linalg.norm(cube.vertices - [1, 1, 0], axis=1) > 0.5
index = np.cumsum(keep) - 1
faces = cube.triangles[keep[cube.triangles].all(axis=1)]
holed = TriangleMesh(cube.vertices[keep], index[faces])

res = inpaint(holed)
p = res.mesh.vertices
on_crease = np.hypot(p[:, 0] - 1, p[:, 1] - 1) < 0.25 * holed.mean_edge_length
new = np.arange(res.mesh.n_vertices) >= res.n_original_vertices
print(f"filled {res.new_face_mask.sum()} faces, {new.sum()} new vertices")
print(f"feature field on the restored crease: max v = {res.v[on_crease & new].max():.4f}")
