"""Acceptance criteria 1-10, one verdict line each.

Iteration-count tolerances: +-20% with a floor of +-2 iterations unless a
criterion pins its own.  Set ``BIEPRECOND_LARGE=1`` to include the
24-lobed N=16384 run in criterion 5.
"""
import math
import os

import numpy as np
import pytest

from bieprecond import experiments, fmmtree, multigrid, nystrom, precond, solver, transfer
from bieprecond.geometry import CurveSpec, build_grid
from bieprecond.linalg import DenseLU, smw_apply

from conftest import ACCEPTANCE

LARGE = os.environ.get("BIEPRECOND_LARGE", "") not in ("", "0")


def _record(num, ok, detail):
    line = f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[num] = line
    print(line)
    assert ok, line


def _close(got, ref, rel=0.2, floor=2):
    return abs(got - ref) <= max(rel * ref, floor)


def _monotone(seq):
    return all(a <= b for a, b in zip(seq, seq[1:]))


def _within_decade(got, ref):
    return 0.1 * ref <= got <= 10 * ref


def test_criterion_01_resolution_metric():
    refs4 = {2048: 7.2e-4, 4096: 3.3e-6, 8192: 8.0e-11}
    got = {n: nystrom.resolution_metric(nystrom.assemble(build_grid(CurveSpec.flower(4), n)))
           for n in refs4}
    got8 = nystrom.resolution_metric(nystrom.assemble(build_grid(CurveSpec.flower(8), 512)))
    ok = all(_within_decade(got[n], refs4[n]) for n in refs4) and _within_decade(got8, 2.7e-1)
    detail = ", ".join(f"4-lobe N={n}: {got[n]:.2e} (ref {refs4[n]:.1e})" for n in refs4)
    _record(1, ok, f"{detail}; 8-lobe N=512: {got8:.2e} (ref 2.7e-01)")


def test_criterion_02_aspect_ratio():
    ref = [3, 4, 7, 10, 13, 15, 17]
    its = [r["iterations"] for r in experiments.table_aspect_ratio()]
    ok = all(abs(a - b) <= 2 for a, b in zip(its, ref)) and _monotone(its)
    _record(2, ok, f"iterations {its} vs {ref} (+-2, monotone)")


def test_criterion_03_lobes():
    ref = [28, 44, 53, 90, 91, 127, 171]
    its = [r["iterations"] for r in experiments.table_lobes()]
    ok = all(_close(a, b) for a, b in zip(its, ref)) and _monotone(its)
    _record(3, ok, f"iterations {its} vs {ref} (+-20%, monotone)")


@pytest.mark.slow
def test_criterion_04_two_level_single_grid():
    rows = experiments.table_two_level(cases=("flower8",), coarse_sizes=())
    its = {r["precond"]: r["single"] for r in rows}
    chain = ["Picard", "P_D", "P_0", "P_1", "P_2", "P_S1"]
    ref = dict(zip(chain, [115, 99, 55, 39, 27, 19]))
    seq = [its[k] for k in chain]
    ordered = all(a >= b for a, b in zip(seq, seq[1:]))
    close = {k: _close(its[k], ref[k]) for k in chain}
    exact_gap = abs(its["P_1"] - its["P_1-Exact"]) <= 2
    ok = ordered and all(close.values()) and exact_gap
    detail = ", ".join(f"{k} {its[k]} (ref {ref[k]}{'' if close[k] else ' x'})" for k in chain)
    _record(4, ok, f"{detail}; ordered={ordered}; |P_1 - P_1-Exact|="
                   f"{abs(its['P_1'] - its['P_1-Exact'])}")


@pytest.mark.slow
def test_criterion_05_single_grid_unresolved():
    ref = {512: 6, 1024: 6, 2048: 8, 4096: 10, 8192: 8}
    rows = experiments.table_single_grid(lobes=(8,), sizes=tuple(ref))
    ps1 = {r["n"]: r["P_S1"] for r in rows}
    ps1_ok = all(_close(ps1[n], ref[n]) for n in ref)
    ilu_ok = all(r["P_0_ilu"] <= r["P_0"] + 3 and r["P_S1_ilu"] <= r["P_S1"] + 3 for r in rows)
    ilu = [(r["P_0"], r["P_0_ilu"], r["P_S1"], r["P_S1_ilu"]) for r in rows]
    detail = f"P_S1 {[ps1[n] for n in ref]} vs {list(ref.values())}; ILU ok={ilu_ok} {ilu}"
    ok = ps1_ok and ilu_ok
    if LARGE:
        big = experiments.table_single_grid(lobes=(24,), sizes=(), large=True)[0]
        large_ok = big["unpre"] >= 500 and big["P_S1"] <= 40
        detail += f"; 24-lobe N=16384 unpre {big['unpre']} P_S1 {big['P_S1']}"
        ok = ok and large_ok
    else:
        detail += "; 24-lobe N=16384 not run (BIEPRECOND_LARGE unset)"
    _record(5, ok, detail)


@pytest.mark.slow
def test_criterion_06_coarse_resolution():
    row = experiments.table_coarse512(sizes=(2048,))[0]
    p512 = row["2grid_Picard_nmin512"]
    p1024 = row["2grid_Picard_nmin1024"]
    p0 = row["2grid_P_0_nmin1024"]
    ok = p512 >= 2 * p1024 and p0 <= 12
    _record(6, ok, f"two-grid Picard N_min=512: {p512}, N_min=1024: {p1024}; "
                   f"two-grid P_0 N_min=1024: {p0} (<= 12)")


def test_criterion_07_cost_model():
    rows = experiments.table_coarsening(cases=("simple", "moderate"))
    bad = []
    for r in rows:
        for mode in ("geometric", "projection"):
            if r[mode] == "":
                continue
            if r["smoother"] == "None":
                per = 1.0
            elif mode == "geometric":
                per = 1.5 * 2 + 1
            else:
                per = 4 + r["mcoarse"]
            if r[f"{mode}_matvecs"] != r[mode] * per:
                bad.append((r["geometry"], r["smoother"], mode))
    simple = next(r for r in rows if r["geometry"] == "simple" and r["smoother"] == "Picard")
    example = (simple["projection"], simple["projection_matvecs"]) == (4, 92)
    _record(7, not bad and example,
            f"{len(rows)} rows checked, mismatches {bad}; Simple Picard projection "
            f"{simple['projection']} its -> {simple['projection_matvecs']:g} matvecs (ref 4 -> 92)")


def test_criterion_08_smoother_spectrum():
    rows = experiments.table_smoother_spectrum()
    amp = {}
    for r in rows:
        amp.setdefault((r["n"], r["smoother"]), []).append(r["amplitude"])
    top_ok = {}
    for (n, kind), a in amp.items():
        if kind == "Picard":
            a = np.array(a)
            top_ok[n] = float(a[n // 4:].max())
    reduce_ok = all(v <= 0.1 for v in top_ok.values())
    at128 = {k: max(a) for (n, k), a in amp.items() if n == 128}
    low_ok = at128["Picard"] > 1 and all(at128[k] < 1 for k in ("P_D", "P_0", "P_1"))
    _record(8, reduce_ok and low_ok,
            "Picard top-half max amplification " + ", ".join(f"N={n}: {v:.1e}" for n, v in
                                                            sorted(top_ok.items()))
            + "; N=128 max " + ", ".join(f"{k} {v:.2f}" for k, v in at128.items()))


def _prop_smw(rng):
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(2, 33))
        p = int(rng.integers(1, min(n, 8) + 1))
        b = np.eye(n) * n + rng.standard_normal((n, n))
        u = rng.standard_normal((n, p)) / np.sqrt(n)
        v = rng.standard_normal((p, n)) / np.sqrt(n)
        if np.linalg.cond(b + u @ v) > 1e8:
            continue
        x = rng.standard_normal(n)
        ref = np.linalg.solve(b + u @ v, x)
        got = smw_apply(DenseLU(b).solve, u, v, x)
        worst = max(worst, np.linalg.norm(got - ref) / np.linalg.norm(ref))
    return worst


def _prop_transfer():
    worst = 0.0
    for n, m in ((32, 16), (128, 32), (256, 64)):
        r, p = transfer.restriction_matrix(n, m), transfer.prolongation_matrix(m, n)
        pr = p @ r
        worst = max(worst, np.abs(r @ p - np.eye(m)).max(), np.abs(pr @ pr - pr).max())
    return worst


def _prop_coverage():
    g = build_grid(CurveSpec.flower(4), 256)
    tree = fmmtree.build_lists(fmmtree.build_tree(g.position, 10))
    hits = np.zeros((256, 256), int)
    for b, _, _, c in fmmtree.interaction_classes(tree):
        hits[np.ix_(tree.box_points(b), tree.box_points(c))] += 1
    return bool(np.all(hits == 1))


def _prop_blocks():
    g = build_grid(CurveSpec.flower(4), 512)
    op = nystrom.assemble(g)
    tree = fmmtree.build_lists(fmmtree.build_tree(g.position, 10))
    total = fmmtree.near_matrix(tree, op).toarray()
    for cls in fmmtree.far_classes(tree, 1):
        total += fmmtree.class_matrix(tree, op, cls).toarray()
    return float(np.abs(total - op.matrix).max())


def _prop_interior():
    g = build_grid(CurveSpec.simple(), 128)
    op = nystrom.assemble(g)
    eta = np.linalg.solve(op.system_matrix(), nystrom.boundary_data_harmonic(g).values)
    pts = np.array([[0.0, 0.0], [0.1, 0.3], [-0.2, -0.5], [0.25, 0.0]])
    return float(np.abs(nystrom.eval_interior(g, eta, pts) - nystrom.reference_harmonic(pts)).max())


def test_criterion_09_property_suites():
    smw = _prop_smw(np.random.default_rng(0))
    tr = _prop_transfer()
    cov = _prop_coverage()
    blocks = _prop_blocks()
    circle = nystrom.assemble(build_grid(CurveSpec.ellipse(1.0), 256)).matrix.sum(axis=1)
    # with the outward normal in the kernel numerator the circle row sum is +1
    row_err = float(np.abs(circle - 1.0).max())
    interior = _prop_interior()
    ok = smw <= 1e-10 and tr <= 1e-13 and cov and blocks <= 1e-13 and row_err <= 1e-13 \
        and interior <= 1e-5
    _record(9, ok, f"SMW {smw:.1e}, transfer {tr:.1e}, coverage {cov}, blocks {blocks:.1e}, "
                   f"circle row sum err {row_err:.1e}, interior err {interior:.1e}")


def test_criterion_10_conditioning():
    conds = [np.linalg.cond(nystrom.assemble(build_grid(CurveSpec.simple(), n)).system_matrix())
             for n in (128, 256, 512, 1024)]
    rho = float(np.abs(np.linalg.eigvals(
        nystrom.assemble(build_grid(CurveSpec.ellipse(1.0), 256)).matrix)).max())
    ratio = max(conds) / min(conds)
    ok = ratio < 2 and 0.99 <= rho <= 1.01
    _record(10, ok, f"cond(I+D) {[round(float(c), 3) for c in conds]} (max/min {ratio:.3f}); "
                    f"circle spectral radius {rho:.4f}")
