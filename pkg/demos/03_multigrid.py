"""Smoothing, coarse-grid resolution and the cost of a cycle."""
import numpy as np

from bieprecond import experiments, fmmtree, multigrid, nystrom, precond, solver
from bieprecond.geometry import CurveSpec, build_grid

# one sweep from a guess holding every frequency: Picard kills the high modes
# but amplifies low ones; the near-field smoothers damp everything a little
op = nystrom.assemble(build_grid(CurveSpec.flower(4), 128))
tree = fmmtree.build_lists(fmmtree.build_tree(op.grid.position, 10))
for kind in ("picard", "blockdiag", "ulist", "vlist1"):
    amp = experiments.smoother_amplification(op, precond.build(kind, op, tree))
    print(f"N=128 {kind:>9s}: max low {amp[:32].max():.2f}, max high {amp[32:].max():.1e}")

# two-grid V(1,0) at N=2048 with a coarse grid that does or does not resolve the curve
op = nystrom.assemble(build_grid(CurveSpec.flower(4), 2048))
f = nystrom.boundary_data_random(op.grid, 0).values
for n_min in (512, 1024):
    h = multigrid.build_hierarchy(op, n_min, cycle=(1, 0), two_grid=True)
    print(f"two-grid Picard, N_min={n_min}: {solver.gmres(op, f, pre=h).iterations} iterations")

# projection coarsening with a fixed coarse GMRES: every iteration costs 4 + m_coarse
op = nystrom.assemble(build_grid(CurveSpec.simple(), 128))
f = nystrom.boundary_data_random(op.grid, 0).values
h = multigrid.build_hierarchy(op, 32, "projection", coarse_solver=multigrid.FixedGMRES(19))
rep = solver.gmres(op, f, pre=h)
print(f"projection V(1,1): {rep.iterations} iterations, {rep.scaled_matvecs:g} scaled matvecs")
print("residual history:", np.array2string(np.array(rep.residual_history), precision=1))
