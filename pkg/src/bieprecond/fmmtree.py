"""Adaptive quadtree, FMM interaction lists and the near/far splitting of D.

Interaction lists follow the adaptive FMM of Carrier, Greengard and Rokhlin:

* ``U(b)``  (leaf b): leaves adjacent to ``b``, ``b`` included.
* ``V(b)``  (any box): children of the colleagues of ``parent(b)`` that are
  not adjacent to ``b``.
* ``W(b)``  (leaf b): descendants of colleagues of ``b`` that are not adjacent
  to ``b`` although their parent is.
* ``X(b)``  (any box): leaves ``a`` with ``b`` in ``W(a)``.

For a target point in leaf ``b`` the source boxes ``U(b)``, ``W(b)`` and
``V(a)``, ``X(a)`` over all ancestors ``a`` of ``b`` (``b`` included) cover
every point exactly once.  Interactions are grouped into classes: class 0 is
``U(b)``; class ``l >= 1`` is ``V(a) + X(a)`` for ``a`` the ``(l-1)``-th
ancestor of ``b``, and ``W(b)`` joins class 1.  Class ``l`` is the matrix
``D_l`` of the decomposition ``D = D_0 + D_1 + D_2 + ...``.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .geometry import BoundaryGrid
from .nystrom import DenseOperator, kernel_block

_MAX_LEVEL = 50


@dataclass
class QuadTree:
    """Boxes are stored in breadth-first order; box 0 is the root.

    Point indices of every box are contiguous in ``perm``:
    box ``b`` owns ``perm[start[b]:end[b]]``.
    """

    points: np.ndarray
    leaf_capacity: int
    level: np.ndarray
    ij: np.ndarray
    center: np.ndarray
    half: np.ndarray
    parent: np.ndarray
    children: list
    start: np.ndarray
    end: np.ndarray
    perm: np.ndarray
    root_center: np.ndarray
    root_half: float
    colleagues: list = field(default_factory=list)
    U: dict = field(default_factory=dict)
    V: dict = field(default_factory=dict)
    W: dict = field(default_factory=dict)
    X: dict = field(default_factory=dict)

    @property
    def n_boxes(self) -> int:
        return len(self.level)

    @property
    def depth(self) -> int:
        return int(self.level.max())

    @property
    def leaves(self) -> np.ndarray:
        return np.array([b for b in range(self.n_boxes) if not self.children[b]], dtype=int)

    def is_leaf(self, b: int) -> bool:
        return not self.children[b]

    def box_points(self, b: int) -> np.ndarray:
        return self.perm[self.start[b]:self.end[b]]

    def npoints(self, b: int) -> int:
        return int(self.end[b] - self.start[b])

    def ancestors(self, b: int):
        """``b`` followed by its parent, grandparent, ... up to the root."""
        while b >= 0:
            yield b
            b = int(self.parent[b])

    def point_leaf(self) -> np.ndarray:
        out = np.empty(len(self.points), dtype=int)
        for b in self.leaves:
            out[self.box_points(b)] = b
        return out

    @property
    def has_lists(self) -> bool:
        return bool(self.colleagues)

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            for b in range(self.n_boxes):
                fh.write(f"{self.level[b]},{self.center[b, 0]!r},{self.center[b, 1]!r},"
                         f"{self.half[b]!r},{self.npoints(b)},{int(self.is_leaf(b))}\n")


def build_tree(points, s: int) -> QuadTree:
    """Subdivide until no leaf holds more than ``s`` points; empty boxes are dropped."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    n = len(pts)
    if n < 1:
        raise ValueError("need at least one point")
    s = int(s)
    if s < 1:
        raise ValueError("leaf capacity must be >= 1")
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    root_center = 0.5 * (lo + hi)
    extent = float(np.max(hi - lo))
    root_half = 0.5 * extent * (1 + 1e-6) if extent > 0 else 1.0

    level, ij, parent, children, start, end = [0], [(0, 0)], [-1], [[]], [0], [n]
    perm = np.arange(n)
    b = 0
    while b < len(level):
        cnt = end[b] - start[b]
        if cnt > s:
            if level[b] >= _MAX_LEVEL:
                raise ValueError(
                    f"box at level {level[b]} still holds {cnt} > {s} points; "
                    "duplicate points exceed the leaf capacity")
            lvl = level[b] + 1
            half = root_half / 2 ** level[b]
            cx = root_center[0] - root_half + (2 * ij[b][0] + 1) * half
            cy = root_center[1] - root_half + (2 * ij[b][1] + 1) * half
            idx = perm[start[b]:end[b]]
            right = pts[idx, 0] > cx
            top = pts[idx, 1] > cy
            quad = right.astype(int) + 2 * top.astype(int)
            order = np.argsort(quad, kind="stable")
            perm[start[b]:end[b]] = idx[order]
            counts = np.bincount(quad, minlength=4)
            off = start[b]
            for q in range(4):
                if counts[q]:
                    children[b].append(len(level))
                    level.append(lvl)
                    ij.append((2 * ij[b][0] + (q & 1), 2 * ij[b][1] + (q >> 1)))
                    parent.append(b)
                    children.append([])
                    start.append(off)
                    end.append(off + counts[q])
                off += counts[q]
        b += 1

    level = np.array(level)
    ij = np.array(ij, dtype=np.int64)
    half = root_half / 2.0 ** level
    center = root_center[None, :] - root_half + (2 * ij + 1) * half[:, None]
    return QuadTree(points=pts, leaf_capacity=s, level=level, ij=ij, center=center,
                    half=half, parent=np.array(parent), children=children,
                    start=np.array(start), end=np.array(end), perm=perm,
                    root_center=root_center, root_half=root_half)


def _adjacent(tree: QuadTree, a: int, b: int) -> bool:
    """Whether the closed squares ``a`` and ``b`` touch (exact integer test)."""
    la, lb = tree.level[a], tree.level[b]
    if la > lb:
        a, b, la, lb = b, a, lb, la
    d = lb - la
    lo = tree.ij[a] << d
    hi = ((tree.ij[a] + 1) << d) - 1
    q = tree.ij[b]
    return bool(np.all(q >= lo - 1) and np.all(q <= hi + 1))


def build_lists(tree: QuadTree) -> QuadTree:
    """Populate colleagues and the U, V, W, X lists in place; returns ``tree``."""
    nb = tree.n_boxes
    colleagues = [[] for _ in range(nb)]
    colleagues[0] = [0]
    for b in range(1, nb):
        p = tree.parent[b]
        for c in colleagues[p]:
            for ch in tree.children[c]:
                if np.all(np.abs(tree.ij[ch] - tree.ij[b]) <= 1):
                    colleagues[b].append(ch)
    tree.colleagues = colleagues

    V = {}
    for b in range(1, nb):
        p = tree.parent[b]
        V[b] = [ch for c in colleagues[p] for ch in tree.children[c]
                if np.any(np.abs(tree.ij[ch] - tree.ij[b]) > 1)]
    V[0] = []

    U, W = {}, {}
    X = defaultdict(list)
    for b in tree.leaves:
        b = int(b)
        u, w = [], []
        stack = [c for c in colleagues[b]]
        while stack:
            c = stack.pop()
            if tree.is_leaf(c):
                u.append(c)
                continue
            for ch in tree.children[c]:
                if _adjacent(tree, ch, b):
                    stack.append(ch)
                else:
                    w.append(ch)
        # coarser leaves touching b are colleagues of one of b's ancestors
        for a in list(tree.ancestors(b))[1:]:
            for c in colleagues[a]:
                if tree.is_leaf(c) and _adjacent(tree, c, b):
                    u.append(c)
        U[b] = sorted(set(u))
        W[b] = sorted(w)
        for c in w:
            X[c].append(b)
    tree.U, tree.V, tree.W = U, V, W
    tree.X = {b: sorted(X.get(b, [])) for b in range(nb)}
    return tree


def _require_lists(tree: QuadTree) -> None:
    if not tree.has_lists:
        build_lists(tree)


def interaction_classes(tree: QuadTree, include_far_field_lists: bool = True):
    """Yield ``(leaf, class, kind, source_box)`` for every interaction.

    ``kind`` is one of ``"U"``, ``"V"``, ``"W"``, ``"X"``.
    """
    _require_lists(tree)
    for b in tree.leaves:
        b = int(b)
        for c in tree.U[b]:
            yield b, 0, "U", c
        for c in tree.W[b]:
            yield b, 1, "W", c
        for cls, a in enumerate(tree.ancestors(b), start=1):
            for c in tree.V.get(a, []):
                yield b, cls, "V", c
            for c in tree.X.get(a, []):
                yield b, cls, "X", c


def _blocks_to_sparse(tree, grid, n, blocks, dense=None):
    rows, cols, vals = [], [], []
    for b, c in blocks:
        t = tree.box_points(b)
        src = tree.box_points(c)
        if dense is not None:
            blk = dense[np.ix_(t, src)]
        else:
            blk = kernel_block(grid, t, src)
        rows.append(np.repeat(t, len(src)).astype(np.int32))
        cols.append(np.tile(src, len(t)).astype(np.int32))
        vals.append(blk.ravel())
    if not rows:
        return sp.csr_matrix((n, n))
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(n, n))


def _operator_parts(op):
    if isinstance(op, DenseOperator):
        return op.grid, op.matrix, op.n
    return op, None, op.n_points


def class_blocks(tree: QuadTree, cls: int, kinds=("U", "V", "W", "X")):
    return [(b, c) for b, k, kind, c in interaction_classes(tree) if k == cls and kind in kinds]


def class_matrix(tree: QuadTree, op, cls: int, kinds=("U", "V", "W", "X")) -> sp.csr_matrix:
    """Exact entries of ``D`` belonging to interaction class ``cls``.

    ``op`` is a :class:`DenseOperator` (entries copied) or a
    :class:`BoundaryGrid` (entries evaluated from the kernel).
    """
    grid, dense, n = _operator_parts(op)
    return _blocks_to_sparse(tree, grid, n, class_blocks(tree, cls, kinds), dense)


def far_classes(tree: QuadTree, start: int) -> list:
    return sorted({k for _, k, _, _ in interaction_classes(tree) if k >= start})


def near_matrix(tree: QuadTree, op) -> sp.csr_matrix:
    """``D_0``: entries of ``D`` with target in leaf ``b`` and source in ``U(b)``."""
    return class_matrix(tree, op, 0)


def leaf_block_matrix(tree: QuadTree, op) -> sp.csr_matrix:
    """Entries of ``D`` with source and target in the same leaf."""
    grid, dense, n = _operator_parts(op)
    return _blocks_to_sparse(tree, grid, n, [(int(b), int(b)) for b in tree.leaves], dense)


@dataclass
class LevelFactor:
    """Multipole factorization ``D_l ~ L M^T + exact``.

    ``L`` and ``M`` are sparse ``N x m_l`` with ``m_l = 2 p (#source boxes)``
    real columns (real and imaginary parts of ``p`` complex moments).
    ``exact`` holds the W- and X-list blocks, which are kept uncompressed.
    """

    level: int
    p: int
    L: sp.csr_matrix
    M: sp.csr_matrix
    exact: sp.csr_matrix
    source_boxes: np.ndarray

    @property
    def rank(self) -> int:
        return self.L.shape[1]

    def matvec(self, v):
        return self.L @ (self.M.T @ v) + self.exact @ v

    def to_sparse(self) -> sp.csr_matrix:
        return (self.L @ self.M.T).tocsr() + self.exact


def compress_level(tree: QuadTree, grid: BoundaryGrid, level: int, p: int) -> LevelFactor:
    """Factor the V-list part of class ``level`` with ``p``-term multipole expansions.

    The moments of box ``c`` (centre ``z_c``, half-width ``h``) are
    ``a_k = sum_j w_j n_j eta_j ((y_j - z_c) / h)^k / pi`` for ``k < p`` (complex
    normals and positions) and the field they produce at a target ``x`` is
    ``Re sum_k -a_k h^k / (x - z_c)^(k+1)``.
    """
    if p < 1:
        raise ValueError("number of moments p must be >= 1")
    if level < 1:
        raise ValueError("far-field classes start at 1")
    _require_lists(tree)
    n = grid.n_points
    pairs = class_blocks(tree, level, kinds=("V",))
    exact = class_matrix(tree, grid, level, kinds=("W", "X"))
    sources = sorted({c for _, c in pairs})
    col = {c: 2 * p * i for i, c in enumerate(sources)}
    m = 2 * p * len(sources)

    z = grid.position[:, 0] + 1j * grid.position[:, 1]
    nz = grid.normal[:, 0] + 1j * grid.normal[:, 1]
    k = np.arange(p)

    mr, mc, mv = [], [], []
    for c in sources:
        idx = tree.box_points(c)
        zc = tree.center[c, 0] + 1j * tree.center[c, 1]
        h = tree.half[c]
        coef = (grid.weights[idx] * nz[idx] / np.pi)[:, None] * ((z[idx] - zc) / h)[:, None] ** k
        cols = col[c] + np.arange(2 * p)
        vals = np.concatenate([coef.real, coef.imag], axis=1)
        mr.append(np.repeat(idx, 2 * p))
        mc.append(np.tile(cols, len(idx)))
        mv.append(vals.ravel())

    lr, lc, lv = [], [], []
    for b, c in pairs:
        idx = tree.box_points(b)
        zc = tree.center[c, 0] + 1j * tree.center[c, 1]
        h = tree.half[c]
        dz = z[idx] - zc
        g = -(1.0 / dz)[:, None] * (h / dz)[:, None] ** k
        cols = col[c] + np.arange(2 * p)
        vals = np.concatenate([g.real, -g.imag], axis=1)
        lr.append(np.repeat(idx, 2 * p))
        lc.append(np.tile(cols, len(idx)))
        lv.append(vals.ravel())

    def _mat(r, c_, v):
        if not r:
            return sp.csr_matrix((n, m))
        return sp.csr_matrix((np.concatenate(v), (np.concatenate(r), np.concatenate(c_))),
                             shape=(n, m))

    return LevelFactor(level=level, p=p, L=_mat(lr, lc, lv), M=_mat(mr, mc, mv),
                       exact=exact, source_boxes=np.array(sources, dtype=int))
