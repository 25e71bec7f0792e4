"""Uniform tensor-product grids with homogeneous Dirichlet closure.

Grid functions are plain numpy arrays of shape ``grid.shape`` holding values
on the interior nodes; boundary values are implicitly zero.  Flattening in C
order gives the lexicographic node ordering used by the sparse operators.
"""

from __future__ import annotations

import contextlib
import math
from dataclasses import dataclass

import numpy as np

from .errors import GridError, NegativeWeightError

_DETERMINISTIC = False


def set_deterministic_reductions(flag: bool) -> None:
    """Route every quadrature sum through ``math.fsum`` (order independent)."""
    global _DETERMINISTIC
    _DETERMINISTIC = bool(flag)


@contextlib.contextmanager
def deterministic_reductions(flag: bool = True):
    previous = _DETERMINISTIC
    set_deterministic_reductions(flag)
    try:
        yield
    finally:
        set_deterministic_reductions(previous)


def _sum(values: np.ndarray) -> float:
    if _DETERMINISTIC:
        return math.fsum(np.ravel(values).tolist())
    return float(np.sum(values))


@dataclass(frozen=True)
class Grid:
    dim: int
    extents: tuple[float, ...]
    nodes: tuple[int, ...]

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / (n + 1) for L, n in zip(self.extents, self.nodes))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.nodes

    @property
    def size(self) -> int:
        return math.prod(self.nodes)

    @property
    def cell_volume(self) -> float:
        return math.prod(self.spacing)

    def coordinates(self) -> tuple[np.ndarray, ...]:
        """Interior node coordinates as broadcastable arrays (``ij`` indexing)."""
        axes = [h * np.arange(1, n + 1) for h, n in zip(self.spacing, self.nodes)]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape)

    def check(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if u.shape != self.shape:
            if u.size == self.size:
                return u.reshape(self.shape)
            raise GridError(f"grid function has {u.size} values, grid has {self.size} nodes")
        return u


def build_grid(dim: int, extents, counts) -> Grid:
    """Validate and build a grid.

    >>> build_grid(1, [1.0], [3]).spacing
    (0.25,)
    """
    if dim not in (1, 2, 3):
        raise GridError(f"invalid dimension {dim!r}; expected 1, 2 or 3")
    extents = tuple(float(e) for e in extents)
    counts = tuple(int(c) for c in counts)
    if len(extents) != dim or len(counts) != dim:
        raise GridError(f"need {dim} extents and {dim} node counts")
    if any(not (e > 0) or not math.isfinite(e) for e in extents):
        raise GridError(f"non-positive extent in {extents}")
    if any(c < 3 for c in counts):
        raise GridError(f"too few nodes in {counts}; at least 3 interior nodes per axis")
    return Grid(dim, extents, counts)


def laplacian(grid: Grid, u: np.ndarray) -> np.ndarray:
    """Second-order central Laplacian with zero boundary values."""
    u = grid.check(u)
    padded = np.pad(u, 1)
    out = np.zeros_like(u)
    inner = tuple(slice(1, -1) for _ in range(grid.dim))
    for axis, h in enumerate(grid.spacing):
        lo = list(inner)
        hi = list(inner)
        lo[axis] = slice(0, -2)
        hi[axis] = slice(2, None)
        out += (padded[tuple(lo)] - 2.0 * u + padded[tuple(hi)]) / h**2
    return out


def face_differences(grid: Grid, u: np.ndarray) -> list[np.ndarray]:
    """Per-axis first differences on faces, boundary half-cells included.

    Along axis ``i`` the result has ``nodes[i] + 1`` entries.
    """
    u = grid.check(u)
    padded = np.pad(u, 1)
    grads = []
    for axis, h in enumerate(grid.spacing):
        # keep the other axes at interior nodes only
        sl = [slice(1, -1)] * grid.dim
        sl[axis] = slice(None)
        line = padded[tuple(sl)]
        grads.append(np.diff(line, axis=axis) / h)
    return grads


def gradient_sq(grid: Grid, u: np.ndarray) -> float:
    """Discrete ``||grad u||_{L2}^2`` from face differences."""
    total = 0.0
    for g in face_differences(grid, u):
        total += _sum(g * g)
    return total * grid.cell_volume


def inner(grid: Grid, u: np.ndarray, v: np.ndarray) -> float:
    """Midpoint-quadrature L2 inner product."""
    return _sum(grid.check(u) * grid.check(v)) * grid.cell_volume


@dataclass(frozen=True)
class NormBundle:
    l2: float
    l4: float
    linf: float
    h1_semi: float


def l2_norm(grid: Grid, u: np.ndarray) -> float:
    u = grid.check(u)
    return math.sqrt(_sum(u * u) * grid.cell_volume)


def norms(grid: Grid, u: np.ndarray) -> NormBundle:
    u = grid.check(u)
    vol = grid.cell_volume
    u2 = u * u
    return NormBundle(
        l2=math.sqrt(_sum(u2) * vol),
        l4=(_sum(u2 * u2) * vol) ** 0.25,
        linf=float(np.max(np.abs(u))) if u.size else 0.0,
        h1_semi=math.sqrt(gradient_sq(grid, u)),
    )


def weighted_l2(grid: Grid, u: np.ndarray, w: np.ndarray) -> float:
    """``sqrt(sum w u^2 dV)``; a negative weight signals degeneracy upstream."""
    u = grid.check(u)
    w = np.broadcast_to(np.asarray(w, dtype=float), u.shape)
    if np.any(w < 0):
        raise NegativeWeightError(f"weight has negative entries (min {float(w.min()):.6g})")
    return math.sqrt(_sum(w * u * u) * grid.cell_volume)
