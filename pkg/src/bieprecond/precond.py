"""Single-grid preconditioners for ``I + D`` built from near/far splittings.

Each preconditioner approximates ``(I + D_near)^{-1}`` for some choice of
near field ``D_near`` and carries a cost in units of one application of
``D`` (used for the scaled-matvec accounting of the solver).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import fmmtree
from .linalg import (DenseLU, SparseFactorization, Woodbury, truncated_svd,
                     truncated_svd_operator)
from .nystrom import DenseOperator

# a near-field matrix denser than this fraction of N^2 is factored densely
_DENSE_FILL = 0.15


@dataclass
class Preconditioner:
    """A linear map ``v -> P v`` with a per-application cost.

    ``near`` is the sparse ``D_near`` the preconditioner inverts (with the
    identity) and is used for split smoothing; it is ``None`` for Picard.
    """

    kind: str
    solve: Callable[[np.ndarray], np.ndarray]
    cost: float
    near: Optional[sp.spmatrix] = None
    info: dict = field(default_factory=dict)

    def apply(self, v, ctx=None):
        if ctx is not None:
            ctx.charge(self.cost)
        return self.solve(v)

    def __call__(self, v):
        return self.solve(v)


def apply(pre: Preconditioner, v, ctx=None) -> np.ndarray:
    return pre.apply(v, ctx)


def identity() -> Preconditioner:
    """Picard: the single-grid preconditioner is the identity."""
    return Preconditioner("picard", lambda v: np.array(v, dtype=float, copy=True), 0.0)


def _system(near: sp.spmatrix) -> sp.csc_matrix:
    n = near.shape[0]
    return (sp.identity(n, format="csc") + near).tocsc()


def _factor(a: sp.spmatrix, drop_tol: Optional[float] = None):
    n = a.shape[0]
    if drop_tol is None and a.nnz > _DENSE_FILL * n * n:
        return DenseLU(a.toarray())
    return SparseFactorization(a, drop_tol)


def build_from_near(kind: str, near: sp.spmatrix, drop_tol: Optional[float] = None,
                    cost: float = 1.0, **info) -> Preconditioner:
    """Factor ``I + near`` exactly, or by ILU when ``drop_tol`` is given."""
    fact = _factor(_system(near), drop_tol)
    info.setdefault("factorization", "ExactLU" if drop_tol is None else f"ILU({drop_tol:g})")
    return Preconditioner(kind, fact.solve, cost, near.tocsr(), info)


def banded_near(op: DenseOperator, s: int) -> sp.csr_matrix:
    """Entries of ``D`` within cyclic index distance ``s`` of the diagonal."""
    n = op.n
    s = int(s)
    if s < 0:
        raise ValueError("band half-width must be non-negative")
    offsets = np.unique(np.mod(np.arange(-s, s + 1), n)) if 2 * s + 1 < n else np.arange(n)
    rows = np.repeat(np.arange(n), len(offsets))
    cols = (rows + np.tile(offsets, n)) % n
    vals = op.matrix[rows, cols]
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def build_banded(op: DenseOperator, s: int) -> Preconditioner:
    return build_from_near(f"banded({s})", banded_near(op, s), bandwidth=s)


def build_blockdiag(op: DenseOperator, tree) -> Preconditioner:
    """Invert the leaf-diagonal blocks of ``I + D`` independently."""
    leaves = [tree.box_points(b) for b in tree.leaves]
    lus = []
    for idx in leaves:
        blk = op.matrix[np.ix_(idx, idx)].copy()
        blk[np.diag_indices_from(blk)] += 1.0
        lus.append((idx, DenseLU(blk)))

    def solve(v):
        out = np.empty_like(np.asarray(v, dtype=float))
        for idx, lu in lus:
            out[idx] = lu.solve(v[idx])
        return out

    near = fmmtree.leaf_block_matrix(tree, op)
    return Preconditioner("blockdiag", solve, 1.0, near, {"leaves": len(leaves)})


def build_ulist(op: DenseOperator, tree, drop_tol: Optional[float] = None) -> Preconditioner:
    """``P_0 ~ (I + D_0)^{-1}``; ``drop_tol`` selects an ILU instead of exact LU."""
    return build_from_near("ulist", fmmtree.near_matrix(tree, op), drop_tol)


def vlist_near(op: DenseOperator, tree, level: int = 1, p: int = 4,
               exact: bool = False) -> sp.csr_matrix:
    """``D_0`` plus the far-field classes ``1..level``.

    With ``exact`` the classes are copied from ``D``; otherwise the V-list
    blocks are replaced by their ``p``-moment multipole factorization and
    the W/X blocks are kept exactly.
    """
    near = fmmtree.near_matrix(tree, op)
    for cls in range(1, level + 1):
        if exact:
            near = near + fmmtree.class_matrix(tree, op, cls)
        else:
            near = near + fmmtree.compress_level(tree, op.grid, cls, p).to_sparse()
    return near.tocsr()


def build_vlist(op: DenseOperator, tree, level: int = 1, block_rank: int = 4,
                exact: bool = False) -> Preconditioner:
    """``P_1`` / ``P_2``: exact factorization of ``I + D_0 + D_1 (+ D_2)``."""
    if level not in (1, 2):
        raise ValueError("level must be 1 or 2")
    near = vlist_near(op, tree, level, block_rank, exact)
    name = f"vlist{level}" + ("-exact" if exact else "")
    return build_from_near(name, near, None, level=level, moments=block_rank, exact=exact)


def _far_operator(op: DenseOperator, near: sp.csr_matrix) -> spla.LinearOperator:
    d = op.matrix
    near_t = near.T.tocsr()
    return spla.LinearOperator(
        d.shape, dtype=float,
        matvec=lambda v: d @ v - near @ v,
        rmatvec=lambda v: d.T @ v - near_t @ v,
        matmat=lambda v: d @ v - near @ v,
        rmatmat=lambda v: d.T @ v - near_t @ v)


def _low_rank(a, rank: int):
    n = a.shape[0]
    rank = int(rank)
    if rank > n:
        warnings.warn(f"rank {rank} exceeds dimension {n}, clamped", stacklevel=3)
        rank = n
    if rank == 0 or (sp.issparse(a) and a.nnz == 0):
        return np.zeros((n, 0)), np.zeros((0, n))
    if rank >= n - 1 or n <= 256:
        dense = a.toarray() if sp.issparse(a) else (a @ np.eye(n) if isinstance(a, spla.LinearOperator) else a)
        lr = truncated_svd(dense, rank)
    else:
        lr = truncated_svd_operator(a, rank)
    return lr.left, lr.right


def default_rank_z(n: int, s: int) -> int:
    """``ceil(5 log2(N / s))`` vectors for the remaining far field."""
    return max(0, math.ceil(5 * math.log2(n / s))) if n > s else 0


def build_fmmschur(op: DenseOperator, tree, p0: Optional[Preconditioner] = None,
                   rank_d1: int = 5, rank_schur: int = 5, rank_z: Optional[int] = None,
                   drop_tol: Optional[float] = None, compressed_d1: bool = False,
                   moments: int = 4, z_mode: str = "remainder") -> Preconditioner:
    """FMMSCHUR preconditioner ``P_S1`` with a low-rank fold-in of the far field.

    1. ``D_1 ~ L_1 M_1^T`` by a rank ``rank_d1`` truncated SVD of the class-1
       interactions (V, W and X lists of the first level).
    2. ``M_1^T P_0 L_1 ~ U V`` (rank ``rank_schur``) and
       ``S^{-1} ~ I - U (I + V U)^{-1} V``.
    3. ``P_S1 = (I - P_0 L_1 S^{-1} M_1^T) P_0``.
    4. The rest of the far field ``Z = D - D_0 - D_1`` gets a rank ``rank_z``
       truncated SVD ``U_z V_z`` and ``(P_S1^{-1} + U_z V_z)^{-1}`` is applied
       by Woodbury.  ``z_mode="full"`` uses ``Z = D - D_0`` instead, which
       counts the class-1 interactions a second time at low rank.
    """
    n = op.n
    if p0 is None:
        p0 = build_ulist(op, tree, drop_tol)
    s = tree.leaf_capacity
    if rank_z is None:
        rank_z = default_rank_z(n, s)

    if compressed_d1:
        d1 = fmmtree.compress_level(tree, op.grid, 1, moments).to_sparse()
    else:
        d1 = fmmtree.class_matrix(tree, op, 1)
    left1, right1 = _low_rank(d1, rank_d1)

    if left1.shape[1]:
        p0_l1 = np.column_stack([p0.solve(left1[:, i]) for i in range(left1.shape[1])])
        core = right1 @ p0_l1
        lr = truncated_svd(core, min(rank_schur, core.shape[0]))
        u, v = lr.left, lr.right
        # S^{-1} ~ I - U (I + V U)^{-1} V
        inner = np.eye(u.shape[1]) + v @ u
        if np.linalg.cond(inner) > 1e14:
            raise np.linalg.LinAlgError("inner Schur system I + V U is singular")
        inner_inv_v = np.linalg.solve(inner, v)

        def schur_inv(x):
            return x - u @ (inner_inv_v @ x)

        def ps1(x):
            t = p0.solve(x)
            return t - p0_l1 @ schur_inv(right1 @ t)
    else:
        ps1 = p0.solve

    if z_mode not in ("remainder", "full"):
        raise ValueError("z_mode must be 'remainder' or 'full'")
    d0 = fmmtree.near_matrix(tree, op)
    near = (d0 + d1).tocsr()
    uz, vz = _low_rank(_far_operator(op, near if z_mode == "remainder" else d0.tocsr()), rank_z)
    solve = Woodbury(ps1, uz, vz) if uz.shape[1] else ps1
    info = {"rank_d1": left1.shape[1], "rank_schur": rank_schur if left1.shape[1] else 0,
            "rank_z": uz.shape[1], "p0": p0.info.get("factorization"),
            "compressed_d1": compressed_d1, "z_mode": z_mode}
    return Preconditioner("fmmschur", solve, 2.0, near, info)


def split_smoother_step(pre: Preconditioner, op, f, eta) -> np.ndarray:
    """One sweep of ``(I + D_near) eta_new = f - D_far eta``.

    For Picard (no near field) this is ``eta_new = f - D eta``.
    """
    d = getattr(op, "matrix", op)
    f = np.asarray(f, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if pre.near is None:
        return f - d @ eta
    return pre.solve(f - d @ eta + pre.near @ eta)


def build(kind: str, op: DenseOperator, tree=None, *, drop_tol: Optional[float] = None,
          moments: int = 4, bandwidth: int = 10) -> Preconditioner:
    """Build a preconditioner by name.

    Names: ``picard``, ``banded`` (``banded:<s>``), ``blockdiag``, ``ulist``,
    ``vlist1``, ``vlist1-exact``, ``vlist2``, ``fmmschur``.
    """
    name, _, arg = kind.partition(":")
    if name in ("picard", "none", "identity"):
        return identity()
    if name == "banded":
        return build_banded(op, int(arg) if arg else bandwidth)
    if tree is None:
        raise ValueError(f"preconditioner {kind!r} needs a quadtree")
    if not tree.has_lists:
        fmmtree.build_lists(tree)
    if name == "blockdiag":
        return build_blockdiag(op, tree)
    if name == "ulist":
        return build_ulist(op, tree, drop_tol)
    if name == "vlist1":
        return build_vlist(op, tree, 1, moments)
    if name == "vlist1-exact":
        return build_vlist(op, tree, 1, moments, exact=True)
    if name == "vlist2":
        return build_vlist(op, tree, 2, moments)
    if name == "fmmschur":
        return build_fmmschur(op, tree, drop_tol=drop_tol, moments=moments)
    raise ValueError(f"unknown preconditioner {kind!r}")
