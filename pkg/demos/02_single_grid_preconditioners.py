"""Near-field, far-field and low-rank preconditioners on an 8-lobed flower."""
import numpy as np

from bieprecond import fmmtree, nystrom, precond, solver
from bieprecond.geometry import CurveSpec, build_grid

n, s = 1024, 10
g = build_grid(CurveSpec.flower(8), n)
op = nystrom.assemble(g)
f = nystrom.boundary_data_random(g, 0).values

tree = fmmtree.build_lists(fmmtree.build_tree(g.position, s))
print(f"quadtree: {tree.n_boxes} boxes, depth {tree.depth}, {len(tree.leaves)} leaves")

# each step pulls more of D into the factored part
for kind in ("picard", "banded:10", "blockdiag", "ulist", "vlist1", "vlist2", "fmmschur"):
    pre = precond.build(kind, op, tree)
    rep = solver.gmres(op, f, tol=1e-12, pre=pre)
    print(f"{kind:>10s}: {rep.iterations:4d} iterations, {rep.scaled_matvecs:6.0f} scaled matvecs")

# FMMSCHUR with every rank at full size reproduces the exact inverse
small = nystrom.assemble(build_grid(CurveSpec.flower(4), 128))
t = fmmtree.build_lists(fmmtree.build_tree(small.grid.position, 4))
full = precond.build_fmmschur(small, t, rank_d1=128, rank_schur=128, rank_z=128)
v = np.ones(128)
print("full-rank FMMSCHUR error:",
      np.linalg.norm(full(v) - np.linalg.solve(small.system_matrix(), v)))
