"""Experiment drivers behind ``python -m bieprecond table``.

Each ``table_*`` function returns a list of row dicts with a fixed column
order; :func:`write_csv` serializes them.  Right-hand sides are seeded, so
reruns give identical output.
"""
from __future__ import annotations

import csv
import math
from typing import Iterable, Optional

import numpy as np

from . import fmmtree, multigrid as mg, nystrom, precond, solver
from .geometry import CurveSpec, build_grid

TOL = 1e-12

# display labels of the single-grid preconditioners
LABELS = {
    "picard": "Picard", "banded:2": "P_B(2)", "banded:10": "P_B(10)",
    "blockdiag": "P_D", "ulist": "P_0", "vlist1-exact": "P_1-Exact",
    "vlist1": "P_1", "vlist2": "P_2", "fmmschur": "P_S1",
}


def next_pow2(x: float) -> int:
    return 1 << max(0, math.ceil(math.log2(x)))


def make_rhs(grid, kind: str = "random", seed: int = 0) -> np.ndarray:
    if kind == "random":
        return nystrom.boundary_data_random(grid, seed).values
    if kind == "harmonic":
        return nystrom.boundary_data_harmonic(grid).values
    raise ValueError(f"unknown right-hand side {kind!r}")


def write_csv(rows: list, path, columns: Optional[Iterable[str]] = None) -> None:
    columns = list(columns or (rows[0].keys() if rows else []))
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(r.get(k, "")) for k in columns})


def _fmt(v):
    if isinstance(v, float):
        return "" if math.isnan(v) else f"{v:.6g}"
    return v


def _problem(spec: CurveSpec, n: int):
    grid = build_grid(spec, n)
    return grid, nystrom.assemble(grid)


def _tree(grid, s: int):
    tree = fmmtree.build_tree(grid.position, s)
    fmmtree.build_lists(tree)
    return tree


def _solve(op, f, pre=None, max_iter: int = 2000):
    return solver.gmres(op, f, tol=TOL, max_iter=max_iter, pre=pre)


def table_aspect_ratio(aspects=(2, 4, 8, 16, 32, 64, 128), rhs: str = "harmonic",
                       seed: int = 0) -> list:
    """Unpreconditioned iterations on ellipses, ``N = max(256, 32 a)`` rounded up."""
    rows = []
    for a in aspects:
        n = next_pow2(max(256, 32 * a))
        grid, op = _problem(CurveSpec.ellipse(a), n)
        rep = _solve(op, make_rhs(grid, rhs, seed))
        rows.append({"aspect": a, "iterations": rep.iterations, "n": n, "rhs": rhs})
    return rows


def table_lobes(lobes=range(2, 9), rhs: str = "random", seed: int = 0) -> list:
    """Unpreconditioned iterations on flowers, ``N = 512 k`` rounded up."""
    rows = []
    for k in lobes:
        n = next_pow2(512 * k)
        grid, op = _problem(CurveSpec.flower(k), n)
        rep = _solve(op, make_rhs(grid, rhs, seed))
        rows.append({"lobes": k, "iterations": rep.iterations, "n": n, "rhs": rhs,
                     "resolution": nystrom.resolution_metric(op)})
    return rows


TWO_LEVEL_CASES = {
    "simple": (CurveSpec.simple(), 2048),
    "moderate": (CurveSpec.moderate(), 2048),
    "flower4": (CurveSpec.flower(4), 2048),
    "flower8": (CurveSpec.flower(8), 4096),
}
TWO_LEVEL_PRECONDS = ("picard", "blockdiag", "ulist", "vlist1-exact", "vlist1", "vlist2",
                      "fmmschur")


def table_two_level(cases=tuple(TWO_LEVEL_CASES), preconds=TWO_LEVEL_PRECONDS,
                    coarse_sizes=(128, 16), s: int = 10, rhs: str = "random",
                    seed: int = 0) -> list:
    """Single-grid vs two-grid V(1,0) with geometric coarsening and exact coarse LU."""
    rows = []
    for name in cases:
        spec, n = TWO_LEVEL_CASES[name]
        grid, op = _problem(spec, n)
        f = make_rhs(grid, rhs, seed)
        tree = _tree(grid, s)
        for kind in preconds:
            pre = precond.build(kind, op, tree)
            row = {"geometry": name, "n": n, "precond": LABELS[kind],
                   "single": _solve(op, f, pre).iterations}
            for n_min in coarse_sizes:
                key = f"nmin{n_min}"
                if kind == "fmmschur":
                    row[key] = ""
                    continue
                h = mg.build_hierarchy(op, n_min, "geometric", kind, (1, 0), mg.ExactLU(),
                                       two_grid=True, leaf=s, fine_smoother=pre)
                row[key] = _solve(op, f, h).iterations
            rows.append(row)
    return rows


COARSENING_CASES = {
    # geometry, N, N_min, m_coarse, leaf capacity
    "simple": (CurveSpec.simple(), 128, 32, 19, 4),
    "moderate": (CurveSpec.moderate(), 256, 64, 17, 4),
    "flower4": (CurveSpec.flower(4), 2048, 512, 20, 10),
    "flower8": (CurveSpec.flower(8), 4096, 1024, 22, 10),
}
COARSENING_SMOOTHERS = ("picard", "banded:2", "banded:10", "blockdiag", "ulist", "vlist1")


def table_coarsening(cases=tuple(COARSENING_CASES), smoothers=COARSENING_SMOOTHERS,
                     rhs: str = "random", seed: int = 0) -> list:
    """Geometric vs projection coarse operators, V(1,1) cycles, with matvec counts."""
    rows = []
    for name in cases:
        spec, n, n_min, m_coarse, s = COARSENING_CASES[name]
        grid, op = _problem(spec, n)
        f = make_rhs(grid, rhs, seed)
        rep = _solve(op, f)
        rows.append({"geometry": name, "n": n, "nmin": n_min, "mcoarse": m_coarse,
                     "smoother": "None", "geometric": rep.iterations,
                     "geometric_matvecs": rep.scaled_matvecs,
                     "projection": "", "projection_matvecs": ""})
        for kind in smoothers:
            row = {"geometry": name, "n": n, "nmin": n_min, "mcoarse": m_coarse,
                   "smoother": LABELS[kind]}
            for mode, cs in (("geometric", mg.ExactLU()), ("projection", mg.FixedGMRES(m_coarse))):
                h = mg.build_hierarchy(op, n_min, mode, kind, (1, 1), cs, leaf=s)
                rep = _solve(op, f, h)
                row[mode] = rep.iterations
                row[f"{mode}_matvecs"] = rep.scaled_matvecs
            rows.append(row)
    return rows


def table_coarse512(sizes=(512, 1024, 2048, 4096, 8192), coarse_sizes=(512, 1024),
                    s: int = 50, rhs: str = "random", seed: int = 0) -> list:
    """Four-lobed flower: single, two-grid and V-cycle, Picard vs P_0, V(1,0)."""
    rows = []
    for n in sizes:
        grid, op = _problem(CurveSpec.flower(4), n)
        f = make_rhs(grid, rhs, seed)
        tree = _tree(grid, s)
        p0 = precond.build_ulist(op, tree)
        row = {"n": n, "resolution": nystrom.resolution_metric(op),
               "unpre": _solve(op, f).iterations}
        row["single_P0"] = _solve(op, f, p0).iterations if n > min(coarse_sizes) else ""
        for n_min in coarse_sizes:
            for kind, pre in (("picard", None), ("ulist", p0)):
                for shape, two in (("2grid", True), ("mg", False)):
                    key = f"{shape}_{LABELS[kind]}_nmin{n_min}"
                    if n_min >= n:
                        row[key] = ""
                        continue
                    h = mg.build_hierarchy(op, n_min, "geometric", kind, (1, 0), mg.ExactLU(),
                                           two_grid=two, leaf=s, fine_smoother=pre)
                    row[key] = _solve(op, f, h).iterations
        rows.append(row)
    return rows


def table_single_grid(lobes=(8, 24), sizes=(512, 1024, 2048, 4096, 8192), s: int = 50,
                      drop_tol: float = 1e-3, large: bool = False, rhs: str = "random",
                      seed: int = 0) -> list:
    """Unresolved flowers: P_D, P_0, P_1 and P_S1 with exact and ILU P_0."""
    rows = []
    for k in lobes:
        ns = tuple(sizes) + ((16384,) if large and k == 24 else ())
        for n in ns:
            grid, op = _problem(CurveSpec.flower(k), n)
            f = make_rhs(grid, rhs, seed)
            tree = _tree(grid, s)
            p0 = precond.build_ulist(op, tree)
            p0i = precond.build_ulist(op, tree, drop_tol)
            row = {"lobes": k, "n": n, "resolution": nystrom.resolution_metric(op),
                   "unpre": _solve(op, f).iterations,
                   "P_D": _solve(op, f, precond.build_blockdiag(op, tree)).iterations,
                   "P_0": _solve(op, f, p0).iterations,
                   "P_0_ilu": _solve(op, f, p0i).iterations}
            if n <= 8192:
                row["P_1"] = _solve(op, f, precond.build_vlist(op, tree, 1)).iterations
            row["P_S1"] = _solve(op, f, precond.build_fmmschur(op, tree, p0=p0)).iterations
            row["P_S1_ilu"] = _solve(op, f, precond.build_fmmschur(op, tree, p0=p0i)).iterations
            rows.append(row)
            del op
    return rows


SPECTRUM_SMOOTHERS = ("picard", "blockdiag", "ulist", "vlist1")


def smoother_amplification(op, pre) -> np.ndarray:
    """Per-mode error amplitude after one sweep from the all-frequency guess.

    With ``f = 0`` the exact solution is zero, so the iterate is the error.
    The guess has every Fourier coefficient equal to one (a scaled delta at
    the first node), so the returned amplitudes are also amplification
    factors.  Index ``k`` holds ``|k|`` for ``k = 0..N/2``.
    """
    n = op.n
    eta0 = np.zeros(n)
    eta0[0] = n
    eta1 = precond.split_smoother_step(pre, op, np.zeros(n), eta0)
    return np.abs(np.fft.rfft(eta1)) / n


def table_smoother_spectrum(sizes=(128, 512, 2048), smoothers=SPECTRUM_SMOOTHERS,
                            s: int = 10) -> list:
    rows = []
    for n in sizes:
        grid, op = _problem(CurveSpec.flower(4), n)
        tree = _tree(grid, s)
        for kind in smoothers:
            amp = smoother_amplification(op, precond.build(kind, op, tree))
            rows.extend({"n": n, "smoother": LABELS[kind], "mode": k, "amplitude": float(a)}
                        for k, a in enumerate(amp))
    return rows


TABLES = {
    "aspect-ratio": table_aspect_ratio,
    "lobes": table_lobes,
    "two-level": table_two_level,
    "coarsening": table_coarsening,
    "coarse512": table_coarse512,
    "single-grid": table_single_grid,
    "smoother-spectrum": table_smoother_spectrum,
}
