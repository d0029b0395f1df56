"""Exception hierarchy shared across the package."""


class MeshError(ValueError):
    """Invalid or unsupported mesh input."""


class MeshParseError(MeshError):
    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}" if where else message)


class NonManifoldError(MeshError):
    """Raised when an edge has more than two incident triangles."""

    def __init__(self, edges):
        self.edges = [tuple(int(i) for i in e) for e in edges]
        shown = ", ".join(str(e) for e in self.edges[:10])
        more = "" if len(self.edges) <= 10 else f" (+{len(self.edges) - 10} more)"
        super().__init__(f"non-manifold edges with >2 incident faces: {shown}{more}")


class DegenerateTriangleError(MeshError):
    def __init__(self, faces):
        self.faces = [int(f) for f in faces]
        shown = ", ".join(str(f) for f in self.faces[:10])
        super().__init__(f"degenerate triangles (near-zero area): {shown}")


class HoleFillingError(MeshError):
    pass


class SolverError(RuntimeError):
    """Base class for linear solver failures."""


class ConvergenceError(SolverError):
    def __init__(self, iterations, residual):
        self.iterations = iterations
        self.residual = residual
        super().__init__(
            f"solver did not converge in {iterations} iterations "
            f"(relative residual {residual:.3e})"
        )


class IndefiniteMatrixError(SolverError):
    def __init__(self, iteration, curvature):
        self.iteration = iteration
        self.curvature = curvature
        super().__init__(
            f"non-positive curvature {curvature:.3e} at CG iteration {iteration}; "
            "matrix is not positive definite"
        )


class FlipLimitError(RuntimeError):
    def __init__(self, flipped, limit):
        self.flipped = flipped
        self.limit = limit
        super().__init__(f"{flipped} flipped triangles exceed the limit of {limit}")
