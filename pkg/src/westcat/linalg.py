"""Sparse SPD operators on structured grids and the solvers that invert them."""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import (
    ConvergenceError,
    NonpositiveMassWeightError,
    NotTridiagonalError,
    NumericBreakdownError,
)
from .grid import Grid

DEFAULT_TOL = 1e-10


@dataclass(frozen=True)
class SparseOperator:
    """CSR matrix acting on grid functions flattened in lexicographic order."""

    matrix: sp.csr_matrix
    grid_shape: tuple[int, ...]

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def row_offsets(self) -> np.ndarray:
        return self.matrix.indptr

    @property
    def column_indices(self) -> np.ndarray:
        return self.matrix.indices

    @property
    def coefficients(self) -> np.ndarray:
        return self.matrix.data

    def diagonal(self) -> np.ndarray:
        return self.matrix.diagonal()

    def apply(self, u: np.ndarray) -> np.ndarray:
        """Matrix action; accepts flat vectors or grid-shaped arrays."""
        u = np.asarray(u, dtype=float)
        return (self.matrix @ u.ravel()).reshape(u.shape)

    @classmethod
    def from_dense(cls, a) -> "SparseOperator":
        a = np.asarray(a, dtype=float)
        return cls(sp.csr_matrix(a), (a.shape[0],))


@dataclass(frozen=True)
class SolveReport:
    iterations: int
    final_residual: float
    converged: bool


def _neg_laplacian_1d(n: int, h: float) -> sp.csr_matrix:
    main = np.full(n, 2.0 / h**2)
    off = np.full(n - 1, -1.0 / h**2)
    return sp.diags([off, main, off], [-1, 0, 1], format="csr")


@functools.lru_cache(maxsize=32)
def _neg_laplacian(grid: Grid) -> sp.csr_matrix:
    eyes = [sp.identity(n, format="csr") for n in grid.nodes]
    total = sp.csr_matrix((grid.size, grid.size))
    for axis, (n, h) in enumerate(zip(grid.nodes, grid.spacing)):
        factors = list(eyes)
        factors[axis] = _neg_laplacian_1d(n, h)
        term = factors[0]
        for f in factors[1:]:
            term = sp.kron(term, f, format="csr")
        total = total + term
    return total.tocsr()


def _assemble(grid: Grid, mass_weights, sigma: float) -> SparseOperator:
    w = np.broadcast_to(np.asarray(mass_weights, dtype=float), grid.shape).ravel()
    mat = sp.diags(w, 0, format="csr")
    if sigma != 0.0:
        mat = mat + sigma * _neg_laplacian(grid)
    mat = mat.tocsr()
    mat.sort_indices()
    return SparseOperator(mat, grid.shape)


def assemble_operator(mass_weights, sigma: float, grid: Grid) -> SparseOperator:
    """Assemble ``diag(w) - sigma * Laplacian_h``.

    Args:
        mass_weights: scalar or grid-shaped array, strictly positive.
        sigma: nonnegative stiffness coefficient.
        grid: the grid the operator acts on.
    """
    w = np.asarray(mass_weights, dtype=float)
    if np.any(~(w > 0)):
        raise NonpositiveMassWeightError("mass weights must be strictly positive")
    if not sigma >= 0:
        raise ValueError(f"sigma must be nonnegative, got {sigma}")
    return _assemble(grid, w, float(sigma))


def negative_laplacian_operator(grid: Grid) -> SparseOperator:
    """The SPD matrix of ``-Laplacian_h`` (no mass term)."""
    return _assemble(grid, 0.0, 1.0)


def cg_solve(A: SparseOperator, b, tol: float = DEFAULT_TOL, maxit: int | None = None,
             x0=None) -> tuple[np.ndarray, SolveReport]:
    """Jacobi-preconditioned conjugate gradients.

    Convergence is declared when the preconditioned residual norm, relative to
    the preconditioned norm of ``b``, drops to ``tol``.  Non-convergence is
    reported through ``SolveReport.converged``; NaNs raise.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    b = np.asarray(b, dtype=float)
    shape = b.shape
    rhs = b.ravel()
    n = A.n
    maxit = 10 * n if maxit is None else int(maxit)
    inv_diag = 1.0 / A.diagonal()
    mat = A.matrix

    bnorm = math.sqrt(float(rhs @ (inv_diag * rhs)))
    if not math.isfinite(bnorm):
        raise NumericBreakdownError("right-hand side is not finite")
    if bnorm == 0.0:
        return np.zeros(shape), SolveReport(0, 0.0, True)

    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float).ravel()
    r = rhs - mat @ x if x0 is not None else rhs.copy()
    z = inv_diag * r
    rz = float(r @ z)
    res = math.sqrt(abs(rz)) / bnorm
    it = 0
    p = z.copy()
    while res > tol and it < maxit:
        q = mat @ p
        pq = float(p @ q)
        if not math.isfinite(pq) or pq <= 0.0:
            raise NumericBreakdownError(f"CG breakdown at iteration {it} (p.Ap = {pq})")
        alpha = rz / pq
        x += alpha * p
        r -= alpha * q
        z = inv_diag * r
        rz_new = float(r @ z)
        if not math.isfinite(rz_new):
            raise NumericBreakdownError(f"CG produced non-finite residual at iteration {it}")
        p = z + (rz_new / rz) * p
        rz = rz_new
        res = math.sqrt(abs(rz)) / bnorm
        it += 1
    return x.reshape(shape), SolveReport(it, res, res <= tol)


def direct_tridiagonal_solve(A: SparseOperator, b) -> np.ndarray:
    """Thomas algorithm; the operator must have bandwidth one."""
    coo = A.matrix.tocoo()
    if len(A.grid_shape) != 1 or np.any(np.abs(coo.row - coo.col) > 1):
        raise NotTridiagonalError("operator is not tridiagonal")
    n = A.n
    diag = A.matrix.diagonal()
    sub = A.matrix.diagonal(-1)  # A[i+1, i]
    sup = A.matrix.diagonal(1)  # A[i, i+1]
    rhs = np.asarray(b, dtype=float).ravel()
    c = np.zeros(n)
    d = np.zeros(n)
    c[0] = sup[0] / diag[0] if n > 1 else 0.0
    d[0] = rhs[0] / diag[0]
    for i in range(1, n):
        denom = diag[i] - sub[i - 1] * c[i - 1]
        c[i] = sup[i] / denom if i + 1 < n else 0.0
        d[i] = (rhs[i] - sub[i - 1] * d[i - 1]) / denom
    x = np.zeros(n)
    x[-1] = d[-1]
    for i in range(n - 2, -1, -1):
        x[i] = d[i] - c[i] * x[i + 1]
    return x.reshape(np.shape(b))


def smallest_eigenvalue(A: SparseOperator, tol: float = 1e-10, maxit: int = 500) -> float:
    """Smallest eigenvalue of an SPD operator by inverse power iteration.

    Each iteration solves with :func:`cg_solve`; the estimate is the Rayleigh
    quotient, stopped once its relative change falls below ``tol``.
    """
    n = A.n
    x = np.ones(n) / math.sqrt(n)
    lam = float(x @ (A.matrix @ x))
    inner_tol = min(1e-13, tol * 1e-2)
    for _ in range(maxit):
        y, rep = cg_solve(A, x, tol=inner_tol, x0=x / lam)
        if not rep.converged and rep.final_residual > 1e-8:
            raise ConvergenceError("inner CG solve failed during inverse iteration")
        x = y / np.linalg.norm(y)
        new = float(x @ (A.matrix @ x))
        if abs(new - lam) <= tol * abs(new):
            return new
        lam = new
    raise ConvergenceError(f"inverse iteration did not converge in {maxit} iterations")
