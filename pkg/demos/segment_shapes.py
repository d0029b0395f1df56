"""Segment a few simple shapes into piecewise smooth parts."""

from atmesh import shapes
from atmesh.pipelines import segment

for name, mesh in (("cube", shapes.cube(3)), ("sphere", shapes.icosphere(3)), ("wedge", shapes.wedge())):
    seg, _ = segment(mesh)
    print(f"{name}: {mesh.n_faces} faces -> {seg.n_segments} segments")
