"""Sparse matrix helpers and a Jacobi-preconditioned conjugate gradient solver.

Matrices are ``scipy.sparse.csr_matrix`` instances with sorted indices and
no duplicate entries.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import ConvergenceError, IndefiniteMatrixError, SolverError


def assemble(triplets, rows, cols):
    """Build a CSR matrix from ``(row, col, value)`` triplets, summing duplicates.

    ``triplets`` is either an iterable of 3-tuples or a tuple of three arrays.
    """
    if isinstance(triplets, tuple) and len(triplets) == 3 and np.ndim(triplets[0]) == 1:
        r, c, v = (np.asarray(a) for a in triplets)
    else:
        arr = np.asarray(list(triplets), dtype=float).reshape(-1, 3)
        r, c, v = arr[:, 0], arr[:, 1], arr[:, 2]
        if np.any(r != np.round(r)) or np.any(c != np.round(c)):
            raise IndexError("non-integer index in triplets")
    r = np.asarray(r, np.int64)
    c = np.asarray(c, np.int64)
    if r.size and (r.min() < 0 or r.max() >= rows or c.min() < 0 or c.max() >= cols):
        raise IndexError(f"triplet index out of range for shape ({rows}, {cols})")
    m = sp.coo_matrix((np.asarray(v, float), (r, c)), shape=(rows, cols)).tocsr()
    m.sum_duplicates()
    m.sort_indices()
    return m


def diag(values):
    return sp.diags(np.asarray(values, float), format="csr")


def spmv(mat, x):
    x = np.asarray(x, float)
    if mat.shape[1] != x.shape[0]:
        raise ValueError(f"dimension mismatch: {mat.shape} @ {x.shape}")
    return mat @ x


def spmv_t(mat, x):
    """Transpose product ``mat.T @ x``."""
    x = np.asarray(x, float)
    if mat.shape[0] != x.shape[0]:
        raise ValueError(f"dimension mismatch: {mat.shape}^T @ {x.shape}")
    return mat.T @ x


def scale_rows(mat, d):
    return diag(d) @ mat


def triple_product(X, d):
    """``X.T @ diag(d) @ X`` as CSR."""
    d = np.asarray(d, float)
    if X.shape[0] != d.shape[0]:
        raise ValueError("dimension mismatch in triple product")
    out = (X.T @ diag(d) @ X).tocsr()
    out.sum_duplicates()
    out.sort_indices()
    return out


def is_symmetric(mat, tol=1e-10, seed=0):
    """Probe ``x.T A y == y.T A x`` on random vectors (relative to their magnitude)."""
    rng = np.random.default_rng(seed)
    n = mat.shape[0]
    if mat.shape[1] != n:
        return False
    x = rng.standard_normal(n)
    y = rng.standard_normal(n)
    a = x @ (mat @ y)
    b = y @ (mat @ x)
    scale = np.abs(x) @ (abs(mat) @ np.abs(y)) + 1e-300
    return abs(a - b) <= tol * scale


@dataclass
class SolveInfo:
    iterations: int
    residual: float
    method: str


def _pcg(A, b, tol, max_iter, x0=None):
    n = b.shape[0]
    d = A.diagonal()
    if np.any(d <= 0):
        k = int(np.argmin(d))
        raise IndefiniteMatrixError(0, float(d[k]))
    inv_d = 1.0 / d
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        return np.zeros(n), 0, 0.0
    x = np.zeros(n) if x0 is None else np.array(x0, float)
    r = b - A @ x
    z = inv_d * r
    p = z.copy()
    rz = r @ z
    res = np.linalg.norm(r) / bnorm
    it = 0
    while res > tol:
        if it >= max_iter:
            raise ConvergenceError(it, res)
        Ap = A @ p
        curv = p @ Ap
        if curv <= 0:
            raise IndefiniteMatrixError(it, float(curv))
        step = rz / curv
        x += step * p
        r -= step * Ap
        it += 1
        res = np.linalg.norm(r) / bnorm
        z = inv_d * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    # guard against drift of the recursive residual
    true_res = np.linalg.norm(b - A @ x) / bnorm
    return x, it, true_res


def spd_solve(A, rhs, tol=1e-8, max_iter=None, method="cg", check_symmetry=True, return_info=False):
    """Solve ``A x = rhs`` for symmetric positive definite ``A``.

    Parameters
    ----------
    A : sparse matrix (n, n)
    rhs : (n,) or (n, k) array
        Each column is solved independently.
    tol : float
        Relative residual target ``||A x - b|| <= tol ||b||``.
    max_iter : int, optional
        Defaults to ``10 * n``.
    method : {"cg", "direct"}
        ``"cg"`` runs Jacobi-preconditioned conjugate gradients. ``"direct"``
        factorizes once with SuperLU (shared by all columns) and applies
        iterative refinement; use it for badly conditioned systems.

    Raises
    ------
    ConvergenceError
        Residual target not met within ``max_iter`` (CG) or after refinement.
    IndefiniteMatrixError
        Non-positive curvature or diagonal encountered during CG.
    """
    A = sp.csr_matrix(A)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError(f"matrix must be square, got {A.shape}")
    b = np.asarray(rhs, float)
    if b.shape[0] != n:
        raise ValueError(f"dimension mismatch: {A.shape} vs rhs {b.shape}")
    if check_symmetry and not is_symmetric(A):
        raise SolverError("matrix is not symmetric")
    if max_iter is None:
        max_iter = 10 * n
    cols = b.reshape(n, -1)
    out = np.empty_like(cols)
    iters, worst = 0, 0.0
    if method == "cg":
        for k in range(cols.shape[1]):
            out[:, k], it, res = _pcg(A, cols[:, k], tol, max_iter)
            if res > tol * 10:
                raise ConvergenceError(it, res)
            iters = max(iters, it)
            worst = max(worst, res)
    elif method == "direct":
        lu = splu(A.tocsc())
        for k in range(cols.shape[1]):
            bk = cols[:, k]
            bnorm = np.linalg.norm(bk)
            if bnorm == 0:
                out[:, k] = 0.0
                continue
            x = lu.solve(bk)
            res = np.linalg.norm(bk - A @ x) / bnorm
            it = 0
            while res > tol and it < 5:
                x += lu.solve(bk - A @ x)
                res = np.linalg.norm(bk - A @ x) / bnorm
                it += 1
            if not np.all(np.isfinite(x)):
                raise SolverError("direct solve produced non-finite values")
            if res > tol:
                raise ConvergenceError(it, res)
            out[:, k] = x
            iters = max(iters, it)
            worst = max(worst, res)
    else:
        raise ValueError(f"unknown method {method!r}")
    x = out.reshape(b.shape)
    if return_info:
        return x, SolveInfo(iters, worst, method)
    return x
