import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bieprecond import fmmtree, nystrom, precond, solver
from bieprecond.geometry import CurveSpec, build_grid


def _op(spec, n):
    return nystrom.assemble(build_grid(spec, n))


def test_identity_converges_in_one_step():
    f = np.random.default_rng(0).standard_normal(50)
    rep = solver.gmres(np.eye(50), f)
    assert rep.iterations == 1 and rep.converged
    np.testing.assert_allclose(rep.solution, f, rtol=1e-14)


def test_zero_rhs_rejected():
    with pytest.raises(ValueError):
        solver.gmres(np.eye(3), np.zeros(3))


def test_history_monotone_and_true_residual():
    op = _op(CurveSpec.flower(4), 512)
    f = np.random.default_rng(1).standard_normal(512)
    rep = solver.gmres(op, f, tol=1e-12)
    h = np.array(rep.residual_history)
    assert h[0] == 1.0 and np.all(np.diff(h) <= 1e-15)
    assert rep.converged and h[-1] <= 1e-12
    assert rep.true_residual <= 1e-11
    assert len(h) == rep.iterations + 1


def test_max_iter_reports_not_converged():
    op = _op(CurveSpec.flower(8), 512)
    rep = solver.gmres(op, np.ones(512) + np.arange(512) % 3, tol=1e-12, max_iter=5)
    assert rep.iterations == 5 and not rep.converged


def test_scaled_matvecs_accounting():
    op = _op(CurveSpec.moderate(), 256)
    tree = fmmtree.build_lists(fmmtree.build_tree(op.grid.position, 10))
    pre = precond.build_fmmschur(op, tree)
    rep = solver.gmres(op, np.random.default_rng(2).standard_normal(256), pre=pre)
    assert rep.scaled_matvecs == rep.iterations * (1 + pre.cost)
    plain = solver.gmres(op, np.ones(256) + op.grid.position[:, 0])
    assert plain.scaled_matvecs == plain.iterations


def test_preconditioned_solution_matches_direct():
    op = _op(CurveSpec.flower(4), 512)
    tree = fmmtree.build_lists(fmmtree.build_tree(op.grid.position, 10))
    f = np.random.default_rng(3).standard_normal(512)
    ref = np.linalg.solve(op.system_matrix(), f)
    for kind in ("ulist", "vlist1", "fmmschur"):
        rep = solver.gmres(op, f, pre=precond.build(kind, op, tree))
        assert np.linalg.norm(rep.solution - ref) <= 1e-9 * np.linalg.norm(ref)


def test_flexible_with_varying_preconditioner():
    # an inexact inner solve changes from call to call; the iterate stays exact
    op = _op(CurveSpec.moderate(), 128)
    a = op.system_matrix()
    calls = {"k": 0}

    def inner(v):
        calls["k"] += 1
        return solver.gmres(a, v, tol=0.0, max_iter=1 + calls["k"] % 3).solution

    f = np.random.default_rng(4).standard_normal(128)
    rep = solver.gmres(op, f, tol=1e-12, pre=inner)
    assert rep.converged and rep.true_residual <= 1e-11


def test_mesh_independence_simple():
    its = []
    for n in (512, 1024, 2048):
        g = build_grid(CurveSpec.simple(), n)
        op = nystrom.assemble(g)
        its.append(solver.gmres(op, nystrom.boundary_data_harmonic(g).values).iterations)
    assert max(its) - min(its) <= 1


def test_residuals_csv(tmp_path):
    rep = solver.gmres(np.diag([1.0, 2.0, 3.0]), np.ones(3))
    path = tmp_path / "r.csv"
    rep.residuals_to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "iter,relres" and len(lines) == rep.iterations + 2


def test_context_accumulates_across_solves():
    ctx = solver.SolveContext()
    solver.gmres(np.diag([1.0, 2.0]), np.ones(2), ctx=ctx)
    first = ctx.scaled_matvecs
    rep = solver.gmres(np.diag([1.0, 2.0]), np.ones(2), ctx=ctx)
    assert ctx.scaled_matvecs == first + rep.scaled_matvecs


@settings(max_examples=25, deadline=None)
@given(n=st.integers(2, 30), seed=st.integers(0, 2 ** 31))
def test_random_well_conditioned_systems(n, seed):
    rng = np.random.default_rng(seed)
    a = np.eye(n) + 0.4 * rng.standard_normal((n, n)) / np.sqrt(n)
    f = rng.standard_normal(n)
    rep = solver.gmres(a, f, tol=1e-12)
    assert rep.converged and rep.iterations <= n
    assert np.linalg.norm(a @ rep.solution - f) <= 1e-10 * np.linalg.norm(f)
