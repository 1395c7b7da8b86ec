"""Trapezoid-rule Nystrom discretization of the Laplace double layer.

The kernel is

    K(x, y) = (1 / 2 pi) n_y . (y - x) / |y - x|^2,

with ``n_y`` the outward unit normal.  With this sign the double layer of the
unit density equals 1 inside the domain and 1/2 on the boundary, the
on-curve limit of ``K`` is ``+kappa / 4 pi``, and the interior Dirichlet
problem ``u = g`` becomes ``(I + D_N) eta = 2 g`` with
``D_N[j, k] = 2 K(x_j, x_k) |ds_k|``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import BoundaryGrid

_CHUNK = 512


def kernel(x, y, n_y) -> np.ndarray:
    """Double-layer kernel for (broadcastable) points ``x != y``."""
    x, y, n_y = (np.asarray(a, dtype=float) for a in (x, y, n_y))
    d = y - x
    return np.sum(n_y * d, axis=-1) / (2 * np.pi * np.sum(d * d, axis=-1))


def diagonal_limit(kappa) -> np.ndarray | float:
    """Limit of ``K(x0, y)`` as ``y -> x0`` along the curve."""
    return np.asarray(kappa) / (4 * np.pi) if np.ndim(kappa) else kappa / (4 * np.pi)


@dataclass(frozen=True)
class DenseOperator:
    """The ``N x N`` matrix ``D_N`` together with the grid it discretizes."""

    matrix: np.ndarray
    grid: BoundaryGrid

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def matvec(self, v: np.ndarray) -> np.ndarray:
        return self.matrix @ v

    def system_matvec(self, v: np.ndarray) -> np.ndarray:
        """``(I + D_N) v``."""
        return v + self.matrix @ v

    def system_matrix(self) -> np.ndarray:
        a = self.matrix.copy()
        a[np.diag_indices_from(a)] += 1.0
        return a


def kernel_block(grid: BoundaryGrid, rows, cols) -> np.ndarray:
    """Entries ``D_N[rows][:, cols]`` without forming ``D_N``."""
    rows = np.asarray(rows)
    cols = np.asarray(cols)
    x = grid.position[rows][:, None, :]
    y = grid.position[cols][None, :, :]
    d = y - x
    r2 = np.einsum("ijk,ijk->ij", d, d)
    same = rows[:, None] == cols[None, :]
    r2[same] = 1.0
    num = np.einsum("jk,ijk->ij", grid.normal[cols], d)
    blk = num / r2 / np.pi
    if same.any():
        i, j = np.nonzero(same)
        blk[i, j] = grid.curvature[rows[i]] / (2 * np.pi)
    return blk * grid.weights[cols][None, :]


def assemble(grid: BoundaryGrid) -> DenseOperator:
    n = grid.n_points
    mat = np.empty((n, n))
    cols = np.arange(n)
    for start in range(0, n, _CHUNK):
        rows = np.arange(start, min(start + _CHUNK, n))
        mat[rows] = kernel_block(grid, rows, cols)
    return DenseOperator(mat, grid)


def resolution_metric(op: DenseOperator) -> float:
    """Relative L2 size of ``D_N 1 / 2 - 1 / 2``, i.e. ``||r|| / ||1||``.

    The continuous double layer of the unit density is exactly 1/2 on the
    curve, so this measures how well the grid resolves the geometry.
    """
    resid = 0.5 * op.matrix.sum(axis=1) - 0.5
    return float(np.sqrt(np.mean(resid ** 2)))


def eval_interior(grid: BoundaryGrid, density, targets) -> np.ndarray:
    """Evaluate ``u(t) = sum_k K(t, x_k) eta_k |ds_k|`` at interior targets.

    No near-singular correction is applied; targets close to the curve get
    inaccurate values.
    """
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    eta = np.asarray(density, dtype=float) * grid.weights
    out = np.empty(len(targets))
    for start in range(0, len(targets), _CHUNK):
        t = targets[start:start + _CHUNK]
        k = kernel(t[:, None, :], grid.position[None, :, :], grid.normal[None, :, :])
        out[start:start + _CHUNK] = k @ eta
    return out


@dataclass(frozen=True)
class BoundaryData:
    values: np.ndarray
    source: str


def reference_harmonic(points) -> np.ndarray:
    """``g(x, y) = x^2 - y^2 + x / 2``."""
    p = np.atleast_2d(np.asarray(points, dtype=float))
    return p[:, 0] ** 2 - p[:, 1] ** 2 + 0.5 * p[:, 0]


def boundary_data_harmonic(grid: BoundaryGrid, g=reference_harmonic) -> BoundaryData:
    name = "x^2 - y^2 + x/2" if g is reference_harmonic else getattr(g, "__name__", "g")
    return BoundaryData(2.0 * g(grid.position), f"harmonic:{name}")


def boundary_data_random(grid: BoundaryGrid, seed: int) -> BoundaryData:
    rng = np.random.default_rng(seed)
    return BoundaryData(rng.standard_normal(grid.n_points), f"random:seed={seed}")
