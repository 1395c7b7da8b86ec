"""Parametric closed curves and their discretizations.

Every curve has the form ``x(theta) = (c r(theta) cos theta, r(theta) sin theta)``
and is sampled at ``N`` equispaced parameter values.  Orientation is
counterclockwise and normals point out of the enclosed domain.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from . import transfer


class CurveKind(str, Enum):
    ELLIPSE = "ellipse"
    SIMPLE = "simple"
    MODERATE = "moderate"
    FLOWER = "flower"


@dataclass(frozen=True)
class CurveSpec:
    """Which curve to sample.

    ``aspect`` is only read for ellipses and ``lobes`` only for flowers.
    """

    kind: CurveKind
    aspect: float = 1.0
    lobes: int = 4

    def __post_init__(self):
        object.__setattr__(self, "kind", CurveKind(self.kind))
        if self.kind is CurveKind.ELLIPSE and not self.aspect >= 1.0:
            raise ValueError(f"ellipse aspect ratio must be >= 1, got {self.aspect}")
        if self.kind is CurveKind.FLOWER and (int(self.lobes) != self.lobes or self.lobes < 2):
            raise ValueError(f"flower needs an integer number of lobes >= 2, got {self.lobes}")

    @classmethod
    def ellipse(cls, aspect: float = 1.0) -> "CurveSpec":
        return cls(CurveKind.ELLIPSE, aspect=float(aspect))

    @classmethod
    def simple(cls) -> "CurveSpec":
        return cls(CurveKind.SIMPLE)

    @classmethod
    def moderate(cls) -> "CurveSpec":
        return cls(CurveKind.MODERATE)

    @classmethod
    def flower(cls, lobes: int) -> "CurveSpec":
        return cls(CurveKind.FLOWER, lobes=int(lobes))

    @property
    def label(self) -> str:
        if self.kind is CurveKind.ELLIPSE:
            return f"ellipse(aspect={self.aspect:g})"
        if self.kind is CurveKind.FLOWER:
            return f"flower(lobes={self.lobes})"
        return self.kind.value

    def radius(self, theta: np.ndarray):
        """Return ``(c, r, r', r'')`` at the parameter values ``theta``."""
        theta = np.asarray(theta, dtype=float)
        if self.kind is CurveKind.ELLIPSE:
            one = np.ones_like(theta)
            return self.aspect, one, 0 * one, 0 * one
        if self.kind is CurveKind.SIMPLE:
            # 0.5 sqrt(cos^2 + 9 sin^2) = 0.5 sqrt(q), q = 5 - 4 cos 2t
            q = 5.0 - 4.0 * np.cos(2 * theta)
            dq = 8.0 * np.sin(2 * theta)
            ddq = 16.0 * np.cos(2 * theta)
            sq = np.sqrt(q)
            r = 0.5 * sq + 0.07 * np.cos(12 * theta)
            dr = 0.25 * dq / sq - 0.84 * np.sin(12 * theta)
            ddr = 0.5 * (ddq / (2 * sq) - dq**2 / (4 * q * sq)) - 10.08 * np.cos(12 * theta)
            return 0.85, r, dr, ddr
        if self.kind is CurveKind.MODERATE:
            r = 1.0 + 0.5 * np.cos(3 * theta) + 0.05 * np.cos(30 * theta)
            dr = -1.5 * np.sin(3 * theta) - 1.5 * np.sin(30 * theta)
            ddr = -4.5 * np.cos(3 * theta) - 45.0 * np.cos(30 * theta)
            return 1.0, r, dr, ddr
        k = self.lobes
        r = 1.0 + 0.98 * np.cos(k * theta)
        dr = -0.98 * k * np.sin(k * theta)
        ddr = -0.98 * k**2 * np.cos(k * theta)
        return 1.0, r, dr, ddr


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class BoundaryGrid:
    """An ``N``-point sampling of a closed curve.

    Attributes
    ----------
    theta : (N,) parameter values ``2 pi j / N``
    position, normal : (N, 2)
    curvature : (N,) signed curvature, positive where the curve is convex
    jacobian : (N,) speed ``|x'(theta)|``
    """

    spec: CurveSpec
    theta: np.ndarray
    position: np.ndarray
    normal: np.ndarray
    curvature: np.ndarray
    jacobian: np.ndarray
    coarsened_from: Optional[int] = field(default=None, compare=False)

    @property
    def n_points(self) -> int:
        return self.theta.shape[0]

    @property
    def weights(self) -> np.ndarray:
        """Trapezoid arclength weights ``|x'(theta_j)| 2 pi / N``."""
        return self.jacobian * (2 * np.pi / self.n_points)

    def turning_number_integral(self) -> float:
        return float(np.sum(self.curvature * self.weights))

    def signed_area(self) -> float:
        x, y = self.position.T
        # x' and y' recovered from the unit tangent (-n_y, n_x) times the speed
        dx = -self.normal[:, 1] * self.jacobian
        dy = self.normal[:, 0] * self.jacobian
        return float(0.5 * np.sum(x * dy - y * dx) * 2 * np.pi / self.n_points)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["j", "theta", "x", "y", "nx", "ny", "kappa", "jac"])
            for j in range(self.n_points):
                vals = (self.theta[j], *self.position[j], *self.normal[j],
                        self.curvature[j], self.jacobian[j])
                w.writerow([j, *(repr(float(v)) for v in vals)])


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def _from_derivatives(spec, theta, x, y, dx, dy, ddx, ddy, coarsened_from=None):
    speed = np.hypot(dx, dy)
    normal = np.column_stack([dy, -dx]) / speed[:, None]
    kappa = (dx * ddy - dy * ddx) / speed**3
    return BoundaryGrid(
        spec=spec,
        theta=_readonly(theta),
        position=_readonly(np.column_stack([x, y])),
        normal=_readonly(normal),
        curvature=_readonly(kappa),
        jacobian=_readonly(speed),
        coarsened_from=coarsened_from,
    )


def build_grid(spec: CurveSpec, n: int) -> BoundaryGrid:
    """Sample ``spec`` at ``n`` equispaced parameters with exact derivatives."""
    if not isinstance(spec, CurveSpec):
        raise TypeError("spec must be a CurveSpec")
    n = int(n)
    if n < 8 or not _is_pow2(n):
        raise ValueError(f"n must be a power of 2 and at least 8, got {n}")
    theta = 2 * np.pi * np.arange(n) / n
    c, r, dr, ddr = spec.radius(theta)
    cos, sin = np.cos(theta), np.sin(theta)
    x = c * r * cos
    y = r * sin
    dx = c * (dr * cos - r * sin)
    dy = dr * sin + r * cos
    ddx = c * (ddr * cos - 2 * dr * sin - r * cos)
    ddy = ddr * sin + 2 * dr * cos - r * sin
    return _from_derivatives(spec, theta, x, y, dx, dy, ddx, ddy)


def _spectral_derivatives(v: np.ndarray):
    n = v.shape[0]
    vh = np.fft.fft(v)
    k = np.fft.fftfreq(n, 1.0 / n)
    k1 = k.copy()
    k1[n // 2] = 0.0  # odd derivative of the Nyquist mode vanishes on the grid
    d1 = np.fft.ifft(1j * k1 * vh).real
    d2 = np.fft.ifft(-(k**2) * vh).real
    return d1, d2


def coarsen_geometry(grid: BoundaryGrid, m: int) -> BoundaryGrid:
    """Restrict the coordinates of ``grid`` spectrally to ``m`` points.

    Normals, curvature and speed are recomputed from the coarse coordinate
    samples by spectral differentiation, so they describe the coarse curve.
    """
    n = grid.n_points
    m = int(m)
    if m < 8 or n % m != 0 or not _is_pow2(n // m):
        raise ValueError(f"cannot coarsen {n} points to {m}: need m >= 8 and n/m a power of 2")
    if m == n:
        return grid
    x = transfer.restrict(grid.position[:, 0], m)
    y = transfer.restrict(grid.position[:, 1], m)
    dx, ddx = _spectral_derivatives(x)
    dy, ddy = _spectral_derivatives(y)
    theta = 2 * np.pi * np.arange(m) / m
    origin = grid.coarsened_from or n
    return _from_derivatives(grid.spec, theta, x, y, dx, dy, ddx, ddy, coarsened_from=origin)
