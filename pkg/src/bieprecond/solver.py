"""Unrestarted right-preconditioned GMRES with scaled-matvec accounting."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

# reorthogonalize when MGS removes more than this fraction of the norm
_REORTH = 0.7


@dataclass
class SolveContext:
    """Per-solve accumulator of work measured in applications of ``D``."""

    scaled_matvecs: float = 0.0

    def charge(self, amount: float) -> None:
        self.scaled_matvecs += amount


@dataclass
class SolveReport:
    iterations: int
    residual_history: list
    scaled_matvecs: float
    converged: bool
    solution: np.ndarray = field(repr=False)
    true_residual: float = float("nan")

    def residuals_to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iter", "relres"])
            for i, r in enumerate(self.residual_history):
                w.writerow([i, repr(float(r))])


def _as_matvec(a) -> Callable:
    if callable(a):
        return a
    if hasattr(a, "system_matvec"):
        return a.system_matvec
    return lambda v: a @ v


def gmres(apply_a, f, tol: float = 1e-12, max_iter: int = 2000, pre=None,
          ctx: Optional[SolveContext] = None) -> SolveReport:
    """Solve ``A x = f`` by GMRES without restarts, preconditioned on the right.

    ``apply_a`` is a callable, a matrix, or a :class:`DenseOperator` (then
    the system ``I + D`` is solved).  ``pre`` is anything with
    ``apply(v, ctx)`` and ``cost``, or a plain callable (charged 0).
    Preconditioned directions are stored, so the iterate stays correct
    when the preconditioner is itself an inner iteration.

    Every iteration charges one matvec plus the preconditioner cost, giving
    ``scaled_matvecs = iterations * (1 + pre.cost)``.
    """
    matvec = _as_matvec(apply_a)
    f = np.asarray(f, dtype=float)
    ctx = SolveContext() if ctx is None else ctx
    start_cost = ctx.scaled_matvecs
    beta = float(np.linalg.norm(f))
    if beta == 0.0:
        raise ValueError("right-hand side must be nonzero")

    if pre is None:
        precondition = lambda v: v  # noqa: E731
    elif hasattr(pre, "apply"):
        precondition = lambda v: pre.apply(v, ctx)  # noqa: E731
    else:
        precondition = pre

    n = f.shape[0]
    V = [f / beta]
    Z = []
    H = np.zeros((min(max_iter, n) + 1, min(max_iter, n)))
    cs = np.zeros(H.shape[1])
    sn = np.zeros(H.shape[1])
    g = np.zeros(H.shape[0])
    g[0] = beta
    history = [1.0]
    converged = False
    m = 0
    for j in range(H.shape[1]):
        z = precondition(V[j])
        Z.append(z)
        w = matvec(z)
        ctx.charge(1.0)
        norm_before = np.linalg.norm(w)
        for i in range(j + 1):
            h = V[i] @ w
            H[i, j] = h
            w = w - h * V[i]
        hnext = np.linalg.norm(w)
        if hnext < _REORTH * norm_before:
            for i in range(j + 1):
                h = V[i] @ w
                H[i, j] += h
                w = w - h * V[i]
            hnext = np.linalg.norm(w)
        H[j + 1, j] = hnext

        for i in range(j):
            t = cs[i] * H[i, j] + sn[i] * H[i + 1, j]
            H[i + 1, j] = -sn[i] * H[i, j] + cs[i] * H[i + 1, j]
            H[i, j] = t
        denom = np.hypot(H[j, j], H[j + 1, j])
        cs[j], sn[j] = (1.0, 0.0) if denom == 0 else (H[j, j] / denom, H[j + 1, j] / denom)
        H[j, j] = denom
        H[j + 1, j] = 0.0
        g[j + 1] = -sn[j] * g[j]
        g[j] = cs[j] * g[j]
        m = j + 1
        rel = abs(g[j + 1]) / beta
        history.append(rel)
        breakdown = hnext <= 1e-14 * norm_before
        if rel <= tol or breakdown:
            converged = rel <= tol or breakdown
            break
        V.append(w / hnext)

    y = np.linalg.solve(np.triu(H[:m, :m]), g[:m]) if m else np.zeros(0)
    x = np.column_stack(Z[:m]) @ y if m else np.zeros(n)
    true = float(np.linalg.norm(f - matvec(x)) / beta)
    return SolveReport(iterations=m, residual_history=history,
                       scaled_matvecs=ctx.scaled_matvecs - start_cost,
                       converged=converged, solution=x, true_residual=true)
