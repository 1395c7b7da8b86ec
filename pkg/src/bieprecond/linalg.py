"""Dense and sparse kernels shared by the preconditioners."""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla


class SingularSchurError(np.linalg.LinAlgError):
    """The small capacitance matrix of a Woodbury update is singular."""


@dataclass(frozen=True)
class LowRankFactor:
    """``A ~ left @ right`` with ``left`` n x p and ``right`` p x m."""

    left: np.ndarray
    right: np.ndarray

    @property
    def rank(self) -> int:
        return self.left.shape[1]

    def matvec(self, v):
        return self.left @ (self.right @ v)

    def dense(self) -> np.ndarray:
        return self.left @ self.right


def _clamp_rank(p: int, shape) -> int:
    p = int(p)
    if p < 0:
        raise ValueError("rank must be non-negative")
    limit = min(shape)
    if p > limit:
        warnings.warn(f"rank {p} exceeds matrix dimension, clamped to {limit}", stacklevel=3)
        p = limit
    return p


def truncated_svd(a, p: int) -> LowRankFactor:
    """Best rank-``p`` approximation from the full SVD of a dense matrix."""
    a = np.asarray(a.toarray() if sp.issparse(a) else a, dtype=float)
    p = _clamp_rank(p, a.shape)
    if p == 0:
        return LowRankFactor(np.zeros((a.shape[0], 0)), np.zeros((0, a.shape[1])))
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    return LowRankFactor(u[:, :p] * s[:p], vt[:p])


def truncated_svd_operator(a, p: int, seed: int = 0) -> LowRankFactor:
    """Leading ``p`` singular triplets of a large operator via ARPACK.

    Same truncated factor as :func:`truncated_svd` (up to the solver
    tolerance) without the O(n^3) dense decomposition.  ``a`` can be a
    dense array, a sparse matrix or a ``LinearOperator``.
    """
    shape = a.shape
    p = _clamp_rank(p, shape)
    if p == 0:
        return LowRankFactor(np.zeros((shape[0], 0)), np.zeros((0, shape[1])))
    if p >= min(shape) - 1:
        dense = a @ np.eye(shape[1]) if isinstance(a, spla.LinearOperator) else a
        return truncated_svd(dense, p)
    v0 = np.random.default_rng(seed).standard_normal(min(shape))
    u, s, vt = spla.svds(a, k=p, v0=v0, tol=1e-10)
    order = np.argsort(s)[::-1]
    return LowRankFactor(u[:, order] * s[order], vt[order])


class SparseFactorization:
    """Exact (``drop_tol is None``) or incomplete LU of a sparse matrix.

    The incomplete variant uses SuperLU's threshold ILU: an entry is dropped
    when it is smaller than ``drop_tol`` times the norm of its column, as in
    MATLAB's ``ilu`` with type ``ilutp``.  Fill is capped only at dense size.
    """

    def __init__(self, a, drop_tol: float | None = None):
        a = sp.csc_matrix(a)
        self.shape = a.shape
        self.drop_tol = drop_tol
        try:
            if drop_tol is None:
                self._lu = spla.splu(a, permc_spec="COLAMD")
            else:
                # SuperLU preallocates fill_factor * nnz; never more than dense
                fill = max(1.0, min(1e4, a.shape[0] * a.shape[1] / max(a.nnz, 1)))
                self._lu = spla.spilu(a, drop_tol=drop_tol, fill_factor=fill,
                                      drop_rule="basic", permc_spec="COLAMD")
        except RuntimeError as err:
            raise np.linalg.LinAlgError(f"factorization failed: {err}") from err

    @property
    def kind(self) -> str:
        return "ExactLU" if self.drop_tol is None else f"ILU({self.drop_tol:g})"

    def solve(self, b):
        return self._lu.solve(np.asarray(b, dtype=float))


def exact_lu(a) -> SparseFactorization:
    return SparseFactorization(a, None)


def ilu_drop(a, drop_tol: float) -> SparseFactorization:
    if drop_tol < 0:
        raise ValueError("drop tolerance must be non-negative")
    if drop_tol == 0:
        return SparseFactorization(a, 0.0)
    return SparseFactorization(a, drop_tol)


class DenseLU:
    def __init__(self, a):
        self._lu = sla.lu_factor(np.asarray(a, dtype=float), check_finite=False)

    def solve(self, b):
        return sla.lu_solve(self._lu, b, check_finite=False)


class Woodbury:
    """Apply ``(B + U V)^{-1}`` given a solver for ``B``.

    ``B^{-1} U`` and the LU of ``S = I + V B^{-1} U`` are formed once; each
    application then costs one ``B`` solve plus O(n p) work.
    """

    def __init__(self, b_solve: Callable, u, v, binv_u=None):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        self.b_solve = b_solve
        self.v = v
        p = u.shape[1]
        if binv_u is None:
            binv_u = np.column_stack([b_solve(u[:, i]) for i in range(p)]) if p else u.copy()
        self.binv_u = binv_u
        s = np.eye(p) + v @ binv_u
        if p:
            cond = np.linalg.cond(s)
            if not np.isfinite(cond) or cond > 1e14:
                raise SingularSchurError(f"capacitance matrix is singular (cond ~ {cond:.2e})")
            self._s = sla.lu_factor(s)
        self.rank = p

    def __call__(self, b):
        y = self.b_solve(b)
        if self.rank == 0:
            return y
        return y - self.binv_u @ sla.lu_solve(self._s, self.v @ y)


def smw_apply(b_solve: Callable, u, v, b) -> np.ndarray:
    """``(B + U V)^{-1} b`` by the Sherman-Morrison-Woodbury identity."""
    return Woodbury(b_solve, u, v)(b)
