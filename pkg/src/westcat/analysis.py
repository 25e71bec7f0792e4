"""Discrete Poincare constant and empirical interpolation-inequality constants.

Ladyzhenskaya and Agmon type bounds are checked as ratios

    ||u||_{L4}  / (||u||^{1-d/4} ||u||_{H1}^{d/4})
    ||u||_{Linf} / (||u||^{1-d/4} ||u||_{H2}^{d/4})

over random band-limited samples, with ``||u||_{H1} = sqrt(||u||^2 + |u|_{H1}^2)``
and the H2 proxy ``||u|| + ||Lap_h u||``.  The samples are continuum
functions (random sine combinations) restricted to the grid, so the same seed
gives the same functions at every resolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import Grid, build_grid, l2_norm, laplacian, norms
from .linalg import negative_laplacian_operator, smallest_eigenvalue

INEQUALITIES = ("poincare", "ladyzhenskaya", "agmon")
MAX_MODE = 4


@dataclass
class InequalityReport:
    name: str
    worst_ratio: float
    sample_count: int
    constant_estimate: float


def poincare_constant(grid: Grid, tol: float = 1e-12) -> float:
    """``1 / sqrt(lambda_min)`` of the Dirichlet five-point Laplacian."""
    lam = smallest_eigenvalue(negative_laplacian_operator(grid), tol=tol)
    return 1.0 / math.sqrt(lam)


def closed_form_lambda_min(grid: Grid) -> float:
    """Smallest eigenvalue of the discrete Dirichlet Laplacian from the stencil symbol."""
    return sum((2.0 / h) ** 2 * math.sin(math.pi * h / (2.0 * L)) ** 2
               for h, L in zip(grid.spacing, grid.extents))


def sample_functions(dim: int, sample_count: int, seed: int):
    """Draw coefficient tensors of ``sum c_k prod sin(k_i pi x_i / L_i)``, modes ``1..MAX_MODE``."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < sample_count:
        c = rng.standard_normal((MAX_MODE,) * dim)
        # faster decay for higher modes keeps samples smooth but not single-mode
        for axis in range(dim):
            shape = [1] * dim
            shape[axis] = MAX_MODE
            c = c / np.arange(1, MAX_MODE + 1).reshape(shape)
        if np.any(c != 0):
            out.append(c)
    return out


def evaluate(grid: Grid, coeffs: np.ndarray) -> np.ndarray:
    """Evaluate a sine combination on the interior nodes."""
    coords = grid.coordinates()
    u = np.zeros(grid.shape)
    for idx in np.ndindex(coeffs.shape):
        term = np.full(grid.shape, coeffs[idx])
        for axis, k in enumerate(idx):
            term = term * np.sin((k + 1) * math.pi * coords[axis] / grid.extents[axis])
        u += term
    return u


def interpolation_ratios(grid: Grid, u: np.ndarray) -> dict[str, float]:
    """Ratios of each inequality's left side to its constant-free right side."""
    d = grid.dim
    nb = norms(grid, u)
    if nb.l2 == 0.0:
        raise ValueError("ratios undefined for the zero function")
    h1 = math.sqrt(nb.l2**2 + nb.h1_semi**2)
    h2 = nb.l2 + l2_norm(grid, laplacian(grid, u))
    theta = d / 4.0
    return {
        "poincare": nb.l2 / nb.h1_semi,
        "ladyzhenskaya": nb.l4 / (nb.l2 ** (1 - theta) * h1**theta),
        "agmon": nb.linf / (nb.l2 ** (1 - theta) * h2**theta),
    }


def check_interpolation(grid: Grid, sample_count: int = 100, seed: int = 0) -> list[InequalityReport]:
    """Worst ratios over seeded random samples, one report per inequality."""
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    worst = dict.fromkeys(INEQUALITIES, 0.0)
    for c in sample_functions(grid.dim, sample_count, seed):
        ratios = interpolation_ratios(grid, evaluate(grid, c))
        for name, r in ratios.items():
            worst[name] = max(worst[name], r)
    return [InequalityReport(name, worst[name], sample_count, worst[name]) for name in INEQUALITIES]


def refinement_sweep(dim: int, extents, nodes: int, levels: int = 3, sample_count: int = 100,
                     seed: int = 0) -> list[tuple[int, list[InequalityReport]]]:
    """Run :func:`check_interpolation` on ``levels`` grids, halving ``h`` each time."""
    out = []
    n = nodes
    for _ in range(levels):
        grid = build_grid(dim, extents, (n,) * dim)
        out.append((n, check_interpolation(grid, sample_count, seed)))
        n = 2 * (n + 1) - 1
    return out


def young_gap(x, y, eps: float) -> np.ndarray:
    """``eps x^2 + y^2 / (4 eps) - x y``; nonnegative for every ``eps > 0``."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return eps * x * x + y * y / (4.0 * eps) - x * y
