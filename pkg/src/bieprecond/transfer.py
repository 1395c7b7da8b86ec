"""Spectral restriction and prolongation between periodic grids.

A vector of length ``N`` is read as samples of the trigonometric polynomial
``sum_k c_k exp(i k theta)`` with ``k`` in ``[-N/2, N/2 - 1]``.  Restricting
to ``M`` points keeps the modes ``|k| < M/2`` and folds the pair ``+-M/2``
into the coarse Nyquist mode (which is what sampling ``cos(M theta / 2)``
on the coarse grid produces).  Prolongation splits the coarse Nyquist
coefficient evenly between ``+-M/2`` so real input stays real and
``restrict(prolong(v)) == v`` holds for every coarse vector.
"""
from __future__ import annotations

import numpy as np


def _check_sizes(n: int, m: int) -> None:
    if m < 2 or m % 2 or n % m or (n // m) & (n // m - 1):
        raise ValueError(f"grid sizes {n} -> {m} are not related by a power of 2")


def _coefficients(v: np.ndarray, axis: int) -> np.ndarray:
    return np.fft.fft(v, axis=axis) / v.shape[axis]


def _synthesize(c: np.ndarray, axis: int, real: bool) -> np.ndarray:
    out = np.fft.ifft(c, axis=axis) * c.shape[axis]
    return out.real if real else out


def restrict(v, m: int | None = None, axis: int = 0) -> np.ndarray:
    """Restrict ``v`` (length ``N`` along ``axis``) to ``m`` points, default ``N/2``."""
    v = np.asarray(v)
    n = v.shape[axis]
    if n % 2:
        raise ValueError(f"cannot restrict a grid with an odd number of points ({n})")
    m = n // 2 if m is None else int(m)
    if m == n:
        return v.copy()
    _check_sizes(n, m)
    c = np.moveaxis(_coefficients(v, axis), axis, 0)
    h = m // 2
    cc = np.empty((m,) + c.shape[1:], dtype=complex)
    cc[:h] = c[:h]
    cc[h + 1:] = c[n - h + 1:]
    cc[h] = c[h] + c[n - h]
    cc = np.moveaxis(cc, 0, axis)
    return _synthesize(cc, axis, np.isrealobj(v))


def prolong(v, n: int | None = None, axis: int = 0) -> np.ndarray:
    """Prolong ``v`` (length ``M`` along ``axis``) to ``n`` points, default ``2M``."""
    v = np.asarray(v)
    m = v.shape[axis]
    n = 2 * m if n is None else int(n)
    if m == n:
        return v.copy()
    _check_sizes(n, m)
    c = np.moveaxis(_coefficients(v, axis), axis, 0)
    h = m // 2
    cf = np.zeros((n,) + c.shape[1:], dtype=complex)
    cf[:h] = c[:h]
    cf[n - h + 1:] = c[h + 1:]
    cf[h] = 0.5 * c[h]
    cf[n - h] = 0.5 * c[h]
    cf = np.moveaxis(cf, 0, axis)
    return _synthesize(cf, axis, np.isrealobj(v))


def restriction_matrix(n: int, m: int) -> np.ndarray:
    """Dense ``m x n`` matrix of :func:`restrict`."""
    return restrict(np.eye(n), m, axis=0)


def prolongation_matrix(m: int, n: int) -> np.ndarray:
    """Dense ``n x m`` matrix of :func:`prolong`."""
    return prolong(np.eye(m), n, axis=0)


def project_operator(op, m: int) -> np.ndarray:
    """Coarse operator ``R D P`` of size ``m x m``.

    ``op`` is a :class:`~bieprecond.nystrom.DenseOperator` or a square array.
    """
    a = np.asarray(getattr(op, "matrix", op))
    n = a.shape[0]
    if m == n:
        return a.copy()
    _check_sizes(n, m)
    return restrict(_times_prolongation(a, m), m, axis=0)


def _times_prolongation(a: np.ndarray, m: int) -> np.ndarray:
    """``a @ prolongation_matrix(m, n)`` in O(n^2 log n)."""
    n = a.shape[1]
    h = m // 2
    # column k of g is a applied to exp(i k theta)
    g = np.fft.ifft(a, axis=1) * n
    sel = np.empty((a.shape[0], m), dtype=complex)
    sel[:, :h] = g[:, :h]
    sel[:, h + 1:] = g[:, n - h + 1:]
    sel[:, h] = 0.5 * (g[:, h] + g[:, n - h])
    out = np.fft.fft(sel, axis=1) / m
    return out.real if np.isrealobj(a) else out
