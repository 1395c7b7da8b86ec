"""Command-line entry point: ``python -m bieprecond {solve,table,eval} ...``.

Exit codes: 0 success, 2 bad configuration, 3 GMRES did not converge.

CSV outputs
-----------
``solve`` writes ``report.csv`` with columns
``geometry,n,leaf,precond,coarsening,nmin,cycle,mcoarse,rhs,seed,tol,iterations,
scaled_matvecs,converged,relres,true_relres,resolution`` and ``residuals.csv``
with ``iter,relres``.  ``table`` writes ``<name>.csv`` whose columns follow
the corresponding experiment.  ``eval`` writes ``x,y,u`` for each target.
"""
from __future__ import annotations

import argparse
import csv
import os
import sys
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import experiments, fmmtree, multigrid as mg, nystrom, precond, solver
from .geometry import CurveSpec, build_grid

PRECONDS = ("none", "picard", "banded", "blockdiag", "ulist", "ulist-ilu", "vlist1",
            "vlist1-exact", "vlist2", "fmmschur", "fmmschur-ilu", "multigrid")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    geometry: str = "simple"
    aspect: float = 1.0
    lobes: int = 4
    n: int = 256
    leaf: int = 10
    moments: int = 4
    precond: str = "none"
    bandwidth: int = 10
    nmin: int = 32
    coarsening: str = "geometric"
    cycle: tuple = (1, 1)
    smoother: str = "picard"
    mcoarse: Optional[int] = None
    rhs: str = "harmonic"
    seed: int = 0
    tol: float = 1e-12
    max_iter: int = 2000
    out: str = "."
    drop_tol: float = 1e-3

    def curve(self) -> CurveSpec:
        try:
            return {"ellipse": lambda: CurveSpec.ellipse(self.aspect),
                    "simple": CurveSpec.simple, "moderate": CurveSpec.moderate,
                    "flower": lambda: CurveSpec.flower(self.lobes)}[self.geometry]()
        except KeyError:
            raise ConfigError(f"unknown geometry {self.geometry!r}") from None
        except ValueError as err:
            raise ConfigError(str(err)) from None

    def validate(self) -> None:
        self.curve()
        if self.n < 8 or self.n & (self.n - 1):
            raise ConfigError("--n must be a power of 2 and at least 8")
        if self.leaf < 1 or self.moments < 1:
            raise ConfigError("--leaf and --moments must be positive")
        if self.precond not in PRECONDS:
            raise ConfigError(f"unknown preconditioner {self.precond!r}")
        if self.rhs not in ("harmonic", "random"):
            raise ConfigError("--rhs must be 'harmonic' or 'random'")
        if not self.tol > 0:
            raise ConfigError("--tol must be positive")
        if self.max_iter < 1:
            raise ConfigError("--max-iter must be positive")
        if self.precond == "multigrid":
            if self.coarsening not in mg.MODES:
                raise ConfigError("--coarsening must be geometric or projection")
            if self.nmin < 16 or self.nmin > self.n or self.nmin & (self.nmin - 1):
                raise ConfigError("--nmin must be a power of 2 in [16, N]")
            if self.coarsening == "projection" and not self.mcoarse:
                raise ConfigError("projection coarsening needs --mcoarse")


def _parse_cycle(text: str) -> tuple:
    try:
        a, b = (int(t) for t in text.replace("V(", "").rstrip(")").split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("cycle must look like '1,1' or 'V(1,0)'") from None
    return a, b


def build_preconditioner(cfg: ExperimentConfig, op):
    kind = cfg.precond
    if kind in ("none", "picard"):
        return None
    if kind == "banded":
        return precond.build_banded(op, cfg.bandwidth)
    if kind == "multigrid":
        cs = mg.FixedGMRES(cfg.mcoarse) if cfg.mcoarse else mg.ExactLU()
        return mg.build_hierarchy(op, cfg.nmin, cfg.coarsening, cfg.smoother, cfg.cycle, cs,
                                  leaf=cfg.leaf, moments=cfg.moments, bandwidth=cfg.bandwidth)
    tree = fmmtree.build_tree(op.grid.position, cfg.leaf)
    fmmtree.build_lists(tree)
    if kind.endswith("-ilu"):
        return precond.build(kind[:-4], op, tree, drop_tol=cfg.drop_tol, moments=cfg.moments)
    return precond.build(kind, op, tree, moments=cfg.moments)


def cmd_solve(cfg: ExperimentConfig, dump_geometry: Optional[str] = None):
    cfg.validate()
    grid = build_grid(cfg.curve(), cfg.n)
    if dump_geometry:
        grid.to_csv(dump_geometry)
    op = nystrom.assemble(grid)
    pre = build_preconditioner(cfg, op)
    f = experiments.make_rhs(grid, cfg.rhs, cfg.seed)
    rep = solver.gmres(op, f, tol=cfg.tol, max_iter=cfg.max_iter, pre=pre)
    os.makedirs(cfg.out, exist_ok=True)
    row = {
        "geometry": cfg.curve().label, "n": cfg.n, "leaf": cfg.leaf, "precond": cfg.precond,
        "coarsening": cfg.coarsening if cfg.precond == "multigrid" else "",
        "nmin": cfg.nmin if cfg.precond == "multigrid" else "",
        "cycle": "V(%d,%d)" % cfg.cycle if cfg.precond == "multigrid" else "",
        "mcoarse": cfg.mcoarse or "", "rhs": cfg.rhs, "seed": cfg.seed, "tol": cfg.tol,
        "iterations": rep.iterations, "scaled_matvecs": rep.scaled_matvecs,
        "converged": rep.converged, "relres": rep.residual_history[-1],
        "true_relres": rep.true_residual, "resolution": nystrom.resolution_metric(op),
    }
    experiments.write_csv([row], os.path.join(cfg.out, "report.csv"))
    rep.residuals_to_csv(os.path.join(cfg.out, "residuals.csv"))
    np.save(os.path.join(cfg.out, "density.npy"), rep.solution)
    return rep


def cmd_table(name: str, out: str = ".", large: bool = False, rhs: Optional[str] = None,
              seed: int = 0) -> list:
    if name not in experiments.TABLES:
        raise ConfigError(f"unknown table {name!r}; choose from {sorted(experiments.TABLES)}")
    kwargs = {}
    if name != "smoother-spectrum":
        kwargs["seed"] = seed
        if rhs:
            kwargs["rhs"] = rhs
    if name == "single-grid":
        kwargs["large"] = large
    rows = experiments.TABLES[name](**kwargs)
    os.makedirs(out, exist_ok=True)
    experiments.write_csv(rows, os.path.join(out, f"{name}.csv"))
    return rows


def cmd_eval(cfg: ExperimentConfig, targets_path: str, density_path: Optional[str] = None):
    cfg.validate()
    grid = build_grid(cfg.curve(), cfg.n)
    if density_path:
        eta = np.load(density_path)
        if eta.shape != (cfg.n,):
            raise ConfigError("density length does not match --n")
    else:
        op = nystrom.assemble(grid)
        eta = solver.gmres(op, experiments.make_rhs(grid, cfg.rhs, cfg.seed), tol=cfg.tol).solution
    try:
        targets = np.loadtxt(targets_path, delimiter=",", ndmin=2)
    except (OSError, ValueError) as err:
        raise ConfigError(f"cannot read targets: {err}") from None
    if targets.shape[1] != 2:
        raise ConfigError("targets file needs two columns x,y")
    u = nystrom.eval_interior(grid, eta, targets)
    os.makedirs(cfg.out, exist_ok=True)
    with open(os.path.join(cfg.out, "interior.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "u"])
        for (x, y), val in zip(targets, u):
            w.writerow([repr(float(x)), repr(float(y)), repr(float(val))])
    return u


def _add_problem_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--geometry", default="simple",
                   choices=("ellipse", "simple", "moderate", "flower"))
    p.add_argument("--aspect", type=float, default=1.0, help="ellipse aspect ratio")
    p.add_argument("--lobes", type=int, default=4, help="flower lobes")
    p.add_argument("--n", type=int, default=256, help="number of boundary points")
    p.add_argument("--rhs", default="harmonic", choices=("harmonic", "random"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--max-iter", type=int, default=2000)
    p.add_argument("--out", default=".")


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bieprecond", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="run one configured solve")
    _add_problem_args(ps)
    ps.add_argument("--leaf", type=int, default=10, help="points per quadtree leaf")
    ps.add_argument("--moments", type=int, default=4, help="multipole terms")
    ps.add_argument("--precond", default="none", choices=PRECONDS)
    ps.add_argument("--bandwidth", type=int, default=10, help="band half-width of P_B")
    ps.add_argument("--smoother", default="picard", help="multigrid smoother")
    ps.add_argument("--nmin", type=int, default=32)
    ps.add_argument("--coarsening", default="geometric", choices=mg.MODES)
    ps.add_argument("--cycle", type=_parse_cycle, default=(1, 1))
    ps.add_argument("--mcoarse", type=int, default=None)
    ps.add_argument("--drop-tol", type=float, default=1e-3)
    ps.add_argument("--dump-geometry", metavar="PATH", default=None)

    pt = sub.add_parser("table", help="reproduce one experiment table as CSV")
    pt.add_argument("name", choices=sorted(experiments.TABLES))
    pt.add_argument("--out", default=".")
    pt.add_argument("--rhs", default=None, choices=("harmonic", "random"))
    pt.add_argument("--seed", type=int, default=0)
    pt.add_argument("--large", action="store_true", help="include the N=16384 case")

    pe = sub.add_parser("eval", help="evaluate the solution at interior points")
    _add_problem_args(pe)
    pe.add_argument("targets", help="CSV file of x,y rows")
    pe.add_argument("--density", default=None, help="density.npy from a previous solve")
    return ap


def _config(args) -> ExperimentConfig:
    keys = ExperimentConfig.__dataclass_fields__
    return ExperimentConfig(**{k: v for k, v in vars(args).items() if k in keys and v is not None})


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        if args.command == "solve":
            rep = cmd_solve(_config(args), args.dump_geometry)
            print(f"iterations={rep.iterations} scaled_matvecs={rep.scaled_matvecs:g} "
                  f"relres={rep.residual_history[-1]:.3e} converged={rep.converged}")
            return 0 if rep.converged else 3
        if args.command == "table":
            rows = cmd_table(args.name, args.out, args.large, args.rhs, args.seed)
            print(f"wrote {len(rows)} rows to {os.path.join(args.out, args.name + '.csv')}")
            return 0
        cmd_eval(_config(args), args.targets, args.density)
        return 0
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
