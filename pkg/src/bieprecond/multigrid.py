"""Two-grid and V-cycle preconditioners for ``I + D`` on nested periodic grids.

Coarse operators come either from re-discretizing the coarsened curve
(``"geometric"``) or from sandwiching the fine matrix between spectral
restriction and prolongation (``"projection"``).  The cycle starts from a
zero guess and uses a fixed number of sweeps, so it can be handed to GMRES
as a preconditioner.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from . import fmmtree, nystrom, precond, solver, transfer
from .geometry import BoundaryGrid, coarsen_geometry
from .linalg import DenseLU
from .nystrom import DenseOperator

MODES = ("geometric", "projection")


@dataclass(frozen=True)
class ExactLU:
    """Dense LU of the coarsest system."""


@dataclass(frozen=True)
class FixedGMRES:
    """Exactly ``m_coarse`` unpreconditioned GMRES steps on the coarse system."""

    m_coarse: int


@dataclass(frozen=True)
class PreconditionedGMRES:
    """GMRES to ``tol`` on the coarse system with a single-grid preconditioner."""

    precond: str = "fmmschur"
    tol: float = 1e-10
    leaf: int = 10


CoarseSolver = Union[ExactLU, FixedGMRES, PreconditionedGMRES]


@dataclass
class Level:
    n: int
    op: DenseOperator
    grid: BoundaryGrid
    smoother: Optional[precond.Preconditioner] = None
    tree: Optional[fmmtree.QuadTree] = None
    resolution: float = float("nan")


@dataclass
class Hierarchy:
    """Levels from fine to coarse plus the cycle shape and coarse solver.

    Acts as a preconditioner: ``apply(v, ctx)`` runs one cycle and charges
    :func:`cycle_cost` to ``ctx``.
    """

    levels: list
    mode: str
    cycle: tuple
    coarse_solver: CoarseSolver
    smoother_kind: str
    kind: str = "multigrid"
    near = None
    stats: dict = field(default_factory=lambda: {"coarse_iterations": []})
    _coarse: object = field(default=None, repr=False)

    @property
    def sizes(self) -> list:
        return [lv.n for lv in self.levels]

    @property
    def cost(self) -> float:
        return cycle_cost(self)

    def apply(self, v, ctx=None):
        if ctx is not None:
            ctx.charge(self.cost)
        return vcycle_apply(self, v)

    def __call__(self, v):
        return vcycle_apply(self, v)


def _level_sizes(n: int, n_min: int, two_grid: bool) -> list:
    if n_min < 16:
        raise ValueError("n_min must be at least 16")
    if n_min > n:
        raise ValueError("n_min must not exceed the fine grid size")
    if n_min & (n_min - 1) or n & (n - 1):
        raise ValueError("grid sizes must be powers of 2")
    if n_min == n:
        return [n]
    if two_grid:
        return [n, n_min]
    sizes = [n]
    while sizes[-1] > n_min:
        sizes.append(sizes[-1] // 2)
    return sizes


def build_hierarchy(fine: DenseOperator, n_min: int, mode: str = "geometric",
                    smoother_kind: str = "picard", cycle=(1, 1),
                    coarse_solver: CoarseSolver = ExactLU(), *, two_grid: bool = False,
                    leaf: int = 10, moments: int = 4, bandwidth: int = 10,
                    drop_tol: Optional[float] = None,
                    fine_smoother: Optional[precond.Preconditioner] = None) -> Hierarchy:
    """Build the grid hierarchy, per-level smoothers and the coarse solver.

    Parameters
    ----------
    fine : DenseOperator
        Fine-grid operator; its grid is coarsened for the lower levels.
    n_min : int
        Coarsest grid size.  ``n_min == N`` gives a single level that is
        handled entirely by the coarse solver.
    mode : {"geometric", "projection"}
        How coarse operators are formed.
    smoother_kind : str
        Any name accepted by :func:`precond.build`.
    cycle : (int, int)
        Pre- and post-smoothing counts.
    coarse_solver : ExactLU, FixedGMRES or PreconditionedGMRES
    two_grid : bool
        Jump straight from ``N`` to ``n_min`` instead of halving.
    leaf, moments, bandwidth, drop_tol
        Smoother parameters (leaf capacity ``s``, multipole terms ``p``,
        band half-width, ILU drop tolerance).
    fine_smoother : Preconditioner, optional
        Reuse an already built smoother on the finest level.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    nu_pre, nu_post = (int(c) for c in cycle)
    if nu_pre < 0 or nu_post < 0:
        raise ValueError("smoothing counts must be non-negative")
    sizes = _level_sizes(fine.n, int(n_min), two_grid)

    levels = []
    for i, m in enumerate(sizes):
        if i == 0:
            grid, op = fine.grid, fine
        else:
            grid = coarsen_geometry(fine.grid, m)
            if mode == "geometric":
                op = nystrom.assemble(grid)
            else:
                op = DenseOperator(transfer.project_operator(fine.matrix, m), grid)
        lv = Level(m, op, grid)
        if mode == "geometric":
            lv.resolution = nystrom.resolution_metric(op)
        if i == 0 and fine_smoother is not None and len(sizes) > 1:
            lv.smoother = fine_smoother
        elif i < len(sizes) - 1 and nu_pre + nu_post > 0:
            needs_tree = smoother_kind.partition(":")[0] not in ("picard", "none", "identity", "banded")
            if needs_tree:
                lv.tree = fmmtree.build_tree(grid.position, leaf)
                fmmtree.build_lists(lv.tree)
            lv.smoother = precond.build(smoother_kind, op, lv.tree, drop_tol=drop_tol,
                                        moments=moments, bandwidth=bandwidth)
        levels.append(lv)

    h = Hierarchy(levels, mode, (nu_pre, nu_post), coarse_solver, smoother_kind)
    h._coarse = _make_coarse(levels[-1], coarse_solver, h.stats)
    return h


def _make_coarse(level: Level, cs: CoarseSolver, stats: dict):
    op = level.op
    if isinstance(cs, ExactLU):
        return DenseLU(op.system_matrix()).solve
    if isinstance(cs, FixedGMRES):
        if cs.m_coarse < 1:
            raise ValueError("m_coarse must be positive")

        def fixed(r):
            if not np.any(r):
                return np.zeros_like(r)
            rep = solver.gmres(op, r, tol=0.0, max_iter=cs.m_coarse)
            stats["coarse_iterations"].append(rep.iterations)
            return rep.solution
        return fixed
    if isinstance(cs, PreconditionedGMRES):
        tree = fmmtree.build_tree(level.grid.position, cs.leaf)
        fmmtree.build_lists(tree)
        inner = precond.build(cs.precond, op, tree)

        def pgmres(r):
            if not np.any(r):
                return np.zeros_like(r)
            rep = solver.gmres(op, r, tol=cs.tol, pre=inner.solve)
            stats["coarse_iterations"].append(rep.iterations)
            return rep.solution
        return pgmres
    raise TypeError(f"unknown coarse solver {cs!r}")


def _smooth(level: Level, f, eta):
    if eta is None:
        # zero guess: the far-field term vanishes
        return level.smoother.solve(f) if level.smoother.near is not None else np.array(f, copy=True)
    return precond.split_smoother_step(level.smoother, level.op, f, eta)


def _cycle(h: Hierarchy, i: int, f):
    level = h.levels[i]
    if i == len(h.levels) - 1:
        return h._coarse(f)
    nu_pre, nu_post = h.cycle
    eta = None
    for _ in range(nu_pre):
        eta = _smooth(level, f, eta)
    coarse_n = h.levels[i + 1].n
    resid = f if eta is None else f - level.op.system_matvec(eta)
    corr = transfer.prolong(_cycle(h, i + 1, transfer.restrict(resid, coarse_n)), level.n)
    eta = corr if eta is None else eta + corr
    for _ in range(nu_post):
        eta = _smooth(level, f, eta)
    return eta


def vcycle_apply(h: Hierarchy, f) -> np.ndarray:
    """One V(nu_pre, nu_post) cycle for ``(I + D) eta = f`` from ``eta = 0``."""
    f = np.asarray(f, dtype=float)
    if f.shape != (h.levels[0].n,):
        raise ValueError("right-hand side does not match the fine grid")
    return _cycle(h, 0, f)


def cycle_cost(h: Hierarchy) -> float:
    """Scaled matvecs charged per cycle.

    Each smoothing sweep counts 1.5 matvecs.  A projection-mode coarse solve
    by fixed GMRES adds ``m_coarse`` fine-grid matvecs; other coarse solves
    are free.  The outer GMRES adds 1 per iteration on top of this, so a
    projection V(1,1) totals ``4 + m_coarse`` per iteration.
    """
    total = 1.5 * sum(h.cycle) if len(h.levels) > 1 else 0.0
    if h.mode == "projection" and isinstance(h.coarse_solver, FixedGMRES):
        total += h.coarse_solver.m_coarse
    return total
